"""Material analysis clients.

The fixture client is fully offline: canned specs keyed by (scene,
object_id), with optional dialogue-prompt overrides so user hints like
"this wolf is made of sand" switch the returned material. The remote client
posts the request images and prompt assets to a vision-language endpoint
and validates whatever comes back — the reply is never trusted blindly.
"""

import base64
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from splatphys.errors import AnalysisError, SchemaError, TransportError
from splatphys.materials.spec import parse_material


@dataclass
class AnalysisRequest:
    scene: str
    object_id: int
    image: bytes | None = None  # source view, encoded image bytes
    mask: bytes | None = None  # mask marking the target
    dialogue: str | None = None  # optional user hint


class FixtureClient:
    """Offline, deterministic analysis from a directory of JSON fixtures.

    Layout: <dir>/<scene>.json =
        {"<object_id>": {"default": {...spec...},
                         "with_prompt": [{"contains": "sand", "spec": {...}}]}}
    """

    def __init__(self, fixture_dir):
        self.fixture_dir = Path(fixture_dir)
        self._cache = {}

    def _scene_table(self, scene):
        if scene not in self._cache:
            path = self.fixture_dir / f"{scene}.json"
            if not path.exists():
                raise AnalysisError(f"no fixture file for scene {scene!r} at {path}")
            with open(path) as fh:
                self._cache[scene] = json.load(fh)
        return self._cache[scene]

    def analyze(self, request):
        table = self._scene_table(request.scene)
        entry = table.get(str(request.object_id))
        if entry is None:
            raise AnalysisError(
                f"no fixture for object {request.object_id} in scene {request.scene!r}"
            )
        chosen = entry.get("default")
        if request.dialogue:
            needle = request.dialogue.lower()
            for rule in entry.get("with_prompt", []):
                if rule["contains"].lower() in needle:
                    chosen = rule["spec"]
                    break
        if chosen is None:
            raise AnalysisError(
                f"fixture for ({request.scene}, {request.object_id}) has no applicable spec"
            )
        return parse_material(chosen)


def default_fixture_client():
    """Fixture client over the corpus that ships with the package."""
    return FixtureClient(resources.files("splatphys.materials") / "fixtures")


def _load_prompt_assets():
    root = resources.files("splatphys.materials") / "prompts"
    system = (root / "system.txt").read_text()
    fewshot = json.loads((root / "fewshot.json").read_text())
    return system, fewshot


class RemoteClient:
    """HTTP analysis against a vision-language endpoint.

    The endpoint receives the system prompt, few-shot examples, both images
    (base64) and the optional dialogue, and must reply with the material
    JSON. Transport failures raise TransportError (retriable); malformed
    replies raise AnalysisError carrying the raw text.
    """

    def __init__(self, endpoint, token=None, timeout=30.0, post=None):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self._post = post  # injectable for tests
        self.system_prompt, self.fewshot = _load_prompt_assets()

    def _do_post(self, payload, headers):
        if self._post is not None:
            return self._post(self.endpoint, payload, headers)
        import requests

        try:
            resp = requests.post(
                self.endpoint, json=payload, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"analysis endpoint unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"analysis endpoint returned {resp.status_code}")
        return resp.text

    def analyze(self, request):
        payload = {
            "system": self.system_prompt,
            "examples": self.fewshot,
            "scene": request.scene,
            "object_id": request.object_id,
            "dialogue": request.dialogue,
            "image": base64.b64encode(request.image).decode() if request.image else None,
            "mask": base64.b64encode(request.mask).decode() if request.mask else None,
        }
        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        raw = self._do_post(payload, headers)
        try:
            return parse_material(raw)
        except SchemaError as exc:
            raise AnalysisError(f"endpoint reply failed validation: {exc}", raw_reply=raw) from exc


def analyze(client, request):
    """Run one analysis; returns a validated MaterialSpec."""
    return client.analyze(request)
