"""Versioned JSON code bundles: base descriptor plus optional lift labels.

A bundle is self-contained: the basis vectors reconstruct the base pair,
the stored row supports let loading re-verify bit-exactness, and an
embedded label block reproduces a lifted code.  Loading re-verifies every
structural invariant before the code is used.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .basecode import BaseCode, BasisChoice, build_base, verify_regularity_orthogonality
from .lift import LiftSpec, QcLiftedCode, spec_from_json_dict

BUNDLE_FORMAT = "acqldpc-bundle"
BUNDLE_VERSION = 1


class BundleError(ValueError):
    """Malformed or inconsistent code bundle."""


@dataclass
class CodeBundle:
    base: BaseCode
    lift: Optional[LiftSpec] = None

    def lifted(self) -> Optional[QcLiftedCode]:
        if self.lift is None:
            return None
        return QcLiftedCode(self.base, self.lift)

    def to_json_dict(self) -> dict:
        data = {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "n": self.base.n,
            "rows_per_side": self.base.hx.rows,
            "basis": list(self.base.basis.vectors),
            "x_rows": [
                {
                    "family": info.family,
                    "rep": info.rep,
                    "support": [int(v) for v in self.base.hx.row_support(r)],
                }
                for r, info in enumerate(self.base.x_rows)
            ],
            "z_rows": [
                {
                    "family": info.family,
                    "rep": info.rep,
                    "support": [int(v) for v in self.base.hz.row_support(r)],
                }
                for r, info in enumerate(self.base.z_rows)
            ],
            "lift": self.lift.to_json_dict() if self.lift else None,
        }
        return data

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)
            fh.write("\n")


def load_bundle(path) -> CodeBundle:
    """Load and re-verify a bundle; raises BundleError on any inconsistency."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BundleError(f"cannot parse bundle: {exc}") from exc
    if data.get("format") != BUNDLE_FORMAT:
        raise BundleError(f"not a {BUNDLE_FORMAT} file")
    if data.get("version") != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {data.get('version')}")
    try:
        basis = BasisChoice(tuple(int(v) for v in data["basis"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise BundleError(f"bad basis block: {exc}") from exc
    code = build_base(basis)
    for side, mat in (("x_rows", code.hx), ("z_rows", code.hz)):
        stored = data.get(side)
        if stored is None or len(stored) != mat.rows:
            raise BundleError(f"{side}: wrong row count")
        for r, row in enumerate(stored):
            if sorted(int(v) for v in row["support"]) != [
                int(v) for v in mat.row_support(r)
            ]:
                raise BundleError(f"{side}[{r}]: stored support does not match basis")
    report = verify_regularity_orthogonality(code)
    if not report.ok:
        raise BundleError(f"structural verification failed: {report.failures}")
    lift = None
    if data.get("lift"):
        lift = spec_from_json_dict(data["lift"])
        lift.validate(code)
    return CodeBundle(code, lift)
