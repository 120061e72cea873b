"""Deterministic in-memory mock tools for scenario replay.

Nothing here touches the network, the filesystem, or the wall clock:
every adapter is a pure in-memory simulation so a bank run is exactly
reproducible under a fixed seed.
"""

from __future__ import annotations

import random


class MockEHRStore:
    """Toy electronic-health-record store keyed by patient resource."""

    def __init__(self, rng: random.Random, n_patients: int = 20):
        self.records = {
            f"patient/{i}": {
                "id": i,
                "name": f"patient-{i}",
                "mrn": f"MRN{rng.randrange(10**6):06d}",
                "history": f"history-{rng.randrange(1000)}",
            }
            for i in range(1, n_patients + 1)
        }

    def __call__(self, action: str, args: dict, resource: str | None):
        if action in ("read", "summarize"):
            record = self.records.get(resource or "")
            return {"found": record is not None, "record": record}
        if action in ("query", "search"):
            scope = args.get("scope", "assigned")
            n = len(self.records) if scope == "all-patients" else 1
            return {"matches": n}
        if action == "export":
            return {"exported": len(self.records)}
        if action in ("write", "update", "delete"):
            return {"mutated": resource}
        return {"ok": True}


class MockTradingAPI:
    def __init__(self, rng: random.Random):
        self._prices = {sym: round(10 + rng.random() * 90, 2) for sym in ("ACME", "GLOB", "INIT")}

    def __call__(self, action: str, args: dict, resource: str | None):
        symbol = args.get("symbol", "ACME")
        if action in ("quote", "read", "get"):
            return {"symbol": symbol, "price": self._prices.get(symbol, 0.0)}
        if action in ("order", "trade"):
            return {"symbol": symbol, "filled": args.get("quantity", 0)}
        return {"ok": True}


class MockFileSystem:
    def __init__(self):
        self.files = {"notes/readme.txt": "hello", "notes/plan.txt": "steps"}

    def __call__(self, action: str, args: dict, resource: str | None):
        path = resource or args.get("path", "")
        if action == "read":
            return {"path": path, "content": self.files.get(path)}
        if action == "list":
            return {"entries": sorted(self.files)}
        if action in ("write", "update"):
            self.files[path] = args.get("content", "")
            return {"written": path}
        if action == "delete":
            self.files.pop(path, None)
            return {"deleted": path}
        return {"ok": True}


class MockSearch:
    def __call__(self, action: str, args: dict, resource: str | None):
        return {"query": args.get("q", ""), "hits": 3}


class MockExternalSink:
    """Outbound channel; records everything posted (the exfil target)."""

    def __init__(self):
        self.posts: list[dict] = []

    def __call__(self, action: str, args: dict, resource: str | None):
        if action == "post":
            self.posts.append(dict(args))
            return {"delivered": True, "count": len(self.posts)}
        return {"ok": True}


class MockInsuranceAPI:
    def __call__(self, action: str, args: dict, resource: str | None):
        if action == "query":
            return {"member": args.get("member", ""), "eligible": True}
        if action == "update":
            return {"member": args.get("member", ""), "updated": True}
        return {"ok": True}


class MockDrugChecker:
    def __call__(self, action: str, args: dict, resource: str | None):
        if action == "execute":
            pair = (args.get("drug_a", ""), args.get("drug_b", ""))
            return {"pair": list(pair), "interaction": "none" if pair[0] != pair[1] else "duplicate"}
        return {"ok": True}


class MockCollabChannel:
    def __init__(self):
        self.messages: list[dict] = []

    def __call__(self, action: str, args: dict, resource: str | None):
        if action == "message":
            self.messages.append(dict(args))
            return {"acked": True}
        return {"ok": True}


class MockExplainer:
    def __call__(self, action: str, args: dict, resource: str | None):
        if action == "generate":
            return {"explanation": f"because {args.get('basis', 'evidence')}"}
        return {"ok": True}


class MockTreatmentPlanner:
    def __init__(self):
        self.applied: list[dict] = []

    def __call__(self, action: str, args: dict, resource: str | None):
        if action == "recommend":
            return {"recommendation": f"plan for {args.get('patient', 'unknown')}"}
        if action == "update":
            self.applied.append(dict(args))
            return {"applied": args.get("change", "")}
        return {"ok": True}


def build_mock_tools(seed: int) -> dict:
    """The standard adapter set, one per register tool, seeded."""
    rng = random.Random(seed)
    return {
        "ehr": MockEHRStore(rng),
        "trading": MockTradingAPI(rng),
        "files": MockFileSystem(),
        "search": MockSearch(),
        "external": MockExternalSink(),
        "insurance": MockInsuranceAPI(),
        "drugcheck": MockDrugChecker(),
        "collab": MockCollabChannel(),
        "explain": MockExplainer(),
        "treatment": MockTreatmentPlanner(),
    }
