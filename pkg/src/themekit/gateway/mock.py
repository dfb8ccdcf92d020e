"""Deterministic offline provider.

Two modes:
- default: responses are synthesized deterministically from a hash of the
  request messages and the provider seed, so identical inputs always give
  byte-identical outputs;
- scripted: a fixed list of raw response strings returned in order, used by
  tests to exercise repair turns and fault paths.

Structured prompts carry a line of the form 'schema "<id>"' plus, where the
agent passes machine-readable context, a single ```json fenced block; the
mock keys its synthesis off those.
"""

from __future__ import annotations

import hashlib
import json
import re

import numpy as np

EMBED_DIM = 384

_FILLER = (
    "parents describe how daily routines shift around appointments and "
    "monitoring while they try to keep family life steady and reassure "
    "siblings that everything remains under control at home and school"
).split()


def _digest_seed(*parts: str) -> int:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode("utf-8"))
        h.update(b"\x00")
    return int.from_bytes(h.digest()[:8], "little")


def hash_vector(text: str, seed: int = 0, dim: int = EMBED_DIM) -> np.ndarray:
    """Unit vector derived from a seeded hash of the text. Platform-stable."""
    rng = np.random.default_rng(_digest_seed(str(seed), text))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


_SCHEMA_RE = re.compile(r'schema "([a-z_]+)"')
_FENCE_RE = re.compile(r"```json\s*\n(.*?)\n```", re.DOTALL)


class ScriptExhausted(RuntimeError):
    pass


class MockProvider:
    name = "mock"

    def __init__(self, seed: int = 0, script: list[str] | None = None):
        self.seed = seed
        self._script = list(script) if script is not None else None

    # -- provider interface --------------------------------------------------

    def chat_once(self, request) -> tuple[str, dict]:
        if self._script is not None:
            if not self._script:
                raise ScriptExhausted("scripted mock has no responses left")
            return self._script.pop(0), {"scripted": True}
        text = self._synthesize(request)
        return text, {"mock": True}

    def embed_once(self, texts: list[str], model: str) -> list[list[float]]:
        return [hash_vector(t, self.seed).tolist() for t in texts]

    # -- synthesis -----------------------------------------------------------

    def _synthesize(self, request) -> str:
        joined = "\n".join(content for _, content in request.messages)
        m = _SCHEMA_RE.search(joined)
        rng = np.random.default_rng(_digest_seed(str(self.seed), joined))
        if not m:
            return f"mock-response-{_digest_seed(str(self.seed), joined):016x}"
        schema_id = m.group(1)
        payload = None
        fences = _FENCE_RE.findall(joined)
        if fences:
            try:
                payload = json.loads(fences[-1])
            except json.JSONDecodeError:
                payload = None
        fn = getattr(self, f"_make_{schema_id}", None)
        if fn is None:
            return "{}"
        return json.dumps(fn(payload, joined, rng), indent=1, sort_keys=True)

    def _words(self, text: str) -> list[str]:
        seen: dict[str, None] = {}
        for tok in re.findall(r"[A-Za-z][A-Za-z'-]+", text):
            seen.setdefault(tok.lower(), None)
        pool = list(seen)
        return pool if len(pool) >= 30 else pool + _FILLER

    def _sample_words(self, pool, rng, n) -> str:
        idx = rng.integers(0, len(pool), size=n)
        return " ".join(pool[i] for i in idx)

    def _make_code_list(self, payload, text, rng) -> dict:
        pool = self._words(text)
        count = int(rng.integers(2, 5))
        codes = []
        for _ in range(count):
            codes.append({
                "name": self._sample_words(pool, rng, 9).capitalize(),
                "description": self._sample_words(pool, rng, 80),
                "quotes": self._sample_words(pool, rng, 120),
            })
        return {"codes": codes}

    def _make_code_grouping(self, payload, text, rng) -> dict:
        codes = payload if isinstance(payload, list) else []
        groups = []
        for i in range(0, len(codes), 3):
            batch = codes[i:i + 3]
            label = " ".join(batch[0]["name"].split()[:4]) or f"Group {i // 3 + 1}"
            groups.append({"label": label, "code_ids": [c["id"] for c in batch]})
        return {"groups": groups}

    def _make_preliminary_themes(self, payload, text, rng) -> dict:
        group = payload or {"label": "General", "codes": []}
        pool = self._words(text)
        ids = [c["id"] for c in group.get("codes", [])]
        return {"themes": [{
            "name": ("Parents " + group["label"]).strip(),
            "description": self._sample_words(pool, rng, 70).capitalize() + ".",
            "supporting_code_ids": ids,
        }]}

    def _make_theme_consolidation(self, payload, text, rng) -> dict:
        prelim = (payload or {}).get("preliminary", [])
        themes, seen = [], set()
        for t in prelim:
            if t["name"] in seen:
                continue
            seen.add(t["name"])
            themes.append({
                "name": t["name"],
                "description": t["description"],
                "supporting_code_ids": t.get("supporting_code_ids", []),
            })
        return {"themes": themes}

    def _make_criterion_feedback(self, payload, text, rng) -> dict:
        return {"issues": []}

    def _make_refinement_plan(self, payload, text, rng) -> dict:
        themes = (payload or {}).get("themes", [])
        return {"actions": [], "themes": themes}

    def _make_geval_score(self, payload, text, rng) -> dict:
        return {"score": 4}
