"""Scenario files and built-in use-case suites.

A scenario file is flat ``key = value`` text, one pair per line, ``#`` for
comments. Parameters come in exactly one of two forms:

raw form (analytic):        K, N, p, q, eta
model form (simulatable):   layer_widths, cut_index, K, p

Shared keys: name, variant (sync | nosync | sync_batch | federated), epochs,
bytes_per_scalar, seed, batch_size, activation (identity | relu | sigmoid),
and per-parameter sweep axes ``grid.K``, ``grid.N``, ``grid.p``, ``grid.q``,
``grid.eta``. Numbers accept underscores and scientific notation; eta also
accepts an exact ``a/b`` rational.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

from .cost_model import Method, ScenarioParams
from .errors import ScenarioError
from .nn_core import Activation, ModelSpec

_RAW_KEYS = {"K", "N", "p", "q", "eta"}
_MODEL_KEYS = {"layer_widths", "cut_index"}
_GRID_KEYS = {"grid.K", "grid.N", "grid.p", "grid.q", "grid.eta"}
_SCALAR_KEYS = {
    "name", "variant", "epochs", "bytes_per_scalar", "seed", "batch_size", "activation",
}
_GRID_FIELD = {
    "grid.K": "clients",
    "grid.N": "model_params",
    "grid.p": "dataset_size",
    "grid.q": "smashed_size",
    "grid.eta": "client_fraction",
}
_VARIANTS = ("sync", "nosync", "sync_batch", "federated")

VARIANT_TO_METHOD = {
    "sync": Method.SPLIT_SYNC,
    "sync_batch": Method.SPLIT_SYNC,  # epoch-level closed form is the comparison baseline
    "nosync": Method.SPLIT_NOSYNC,
}


@dataclass
class Scenario:
    name: str
    variant: str = "sync"
    seed: int = 0
    epochs: int = 1
    bytes_per_scalar: int = 4
    batch_size: int = 1
    clients: int | None = None
    dataset_size: int | None = None
    # raw form
    model_params: int | None = None
    smashed_size: int | None = None
    client_fraction: float | Fraction | None = None
    # model form
    model: ModelSpec | None = None
    cut_index: int | None = None
    grids: dict[str, list] = field(default_factory=dict)

    @property
    def is_model_form(self) -> bool:
        return self.model is not None

    def params(self) -> ScenarioParams:
        if self.is_model_form:
            return ScenarioParams.from_model(
                self.model,
                self.cut_index,
                clients=self.clients,
                dataset_size=self.dataset_size,
                bytes_per_scalar=self.bytes_per_scalar,
                epochs=self.epochs,
            )
        return ScenarioParams(
            clients=self.clients,
            model_params=self.model_params,
            dataset_size=self.dataset_size,
            smashed_size=self.smashed_size,
            client_fraction=self.client_fraction,
            bytes_per_scalar=self.bytes_per_scalar,
            epochs=self.epochs,
        )

    def grid(self) -> dict[str, object]:
        """Sweep axes, with the scenario's own values filling non-gridded parameters."""
        base = self.params()
        axes: dict[str, object] = {
            "clients": base.clients,
            "model_params": base.model_params,
            "dataset_size": base.dataset_size,
            "smashed_size": base.smashed_size,
            "client_fraction": base.client_fraction,
            "bytes_per_scalar": base.bytes_per_scalar,
            "epochs": base.epochs,
        }
        for key, values in self.grids.items():
            axes[_GRID_FIELD[key]] = values
        return axes


def _parse_number(text: str, key: str):
    text = text.strip().replace("_", "")
    try:
        return int(text)
    except ValueError:
        pass
    if "/" in text:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"bad rational for {key!r}: {text}") from exc
    try:
        value = float(text)
    except ValueError as exc:
        raise ScenarioError(f"bad number for {key!r}: {text}") from exc
    return value


def _as_int(value, key: str) -> int:
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ScenarioError(f"{key!r} must be an integer, got {value}")


def parse_scenario_text(text: str, name_hint: str = "scenario") -> Scenario:
    """Parse flat key = value scenario text."""
    entries: dict[str, str] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ScenarioError(f"line {lineno}: empty key or value in {raw_line!r}")
        if key in entries:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        known = _RAW_KEYS | _MODEL_KEYS | _GRID_KEYS | _SCALAR_KEYS
        if key not in known:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")
        entries[key] = value

    raw_present = {k for k in entries if k in {"N", "q", "eta"}}
    model_present = {k for k in entries if k in _MODEL_KEYS}
    if raw_present and model_present:
        raise ScenarioError(
            f"scenario mixes raw parameters {sorted(raw_present)} with model form {sorted(model_present)}"
        )
    if not raw_present and not model_present:
        raise ScenarioError("scenario needs either raw parameters (N, q, eta) or a model form (layer_widths, cut_index)")

    sc = Scenario(name=entries.get("name", name_hint))
    if "variant" in entries:
        if entries["variant"] not in _VARIANTS:
            raise ScenarioError(f"variant must be one of {_VARIANTS}, got {entries['variant']!r}")
        sc.variant = entries["variant"]
    for key, attr in (("seed", "seed"), ("epochs", "epochs"),
                      ("bytes_per_scalar", "bytes_per_scalar"), ("batch_size", "batch_size")):
        if key in entries:
            setattr(sc, attr, _as_int(_parse_number(entries[key], key), key))

    if "K" in entries:
        sc.clients = _as_int(_parse_number(entries["K"], "K"), "K")
    if "p" in entries:
        sc.dataset_size = _as_int(_parse_number(entries["p"], "p"), "p")
    if sc.clients is None or sc.dataset_size is None:
        raise ScenarioError("scenario needs both K and p")

    if model_present:
        if model_present != _MODEL_KEYS:
            raise ScenarioError("model form needs both layer_widths and cut_index")
        try:
            widths = tuple(int(w.strip()) for w in entries["layer_widths"].split(","))
        except ValueError as exc:
            raise ScenarioError(f"bad layer_widths: {entries['layer_widths']!r}") from exc
        activation = entries.get("activation", "sigmoid").strip().lower()
        by_name = {a.value.lower(): a for a in Activation}
        if activation not in by_name:
            raise ScenarioError(f"unknown activation {activation!r}")
        sc.model = ModelSpec(layer_widths=widths, activation=by_name[activation])
        sc.cut_index = _as_int(_parse_number(entries["cut_index"], "cut_index"), "cut_index")
    else:
        if raw_present != {"N", "q", "eta"}:
            raise ScenarioError(f"raw form needs N, q and eta; got only {sorted(raw_present)}")
        sc.model_params = _as_int(_parse_number(entries["N"], "N"), "N")
        sc.smashed_size = _as_int(_parse_number(entries["q"], "q"), "q")
        eta = _parse_number(entries["eta"], "eta")
        sc.client_fraction = eta if isinstance(eta, (Fraction, float)) else float(eta)

    for key in _GRID_KEYS:
        if key in entries:
            values = [_parse_number(v, key) for v in entries[key].split(",") if v.strip()]
            if not values:
                raise ScenarioError(f"{key!r} lists no values")
            if key != "grid.eta":
                values = [_as_int(v, key) for v in values]
            sc.grids[key] = values
    return sc


# Use-case suites. Parameter choices sit inside each setting's plausible
# ranges (fleet sizes, model sizes, records, early-layer activation widths);
# what the suites assert is the sign of rho - 1, not absolute bar heights.
_BUILTIN_TEXT = {
    # Millions of wearables, models up to a few million parameters.
    "smartwatch-case-1": """
        name = smartwatch-case-1
        K = 1_000_000
        N = 6_000_000
        p = 10_000_000
        q = 100
        eta = 0.1
    """,
    "smartwatch-case-2": """
        name = smartwatch-case-2
        K = 10_000
        N = 3_000_000
        p = 10_000_000
        q = 100
        eta = 0.1
    """,
    "smartwatch-case-3": """
        name = smartwatch-case-3
        K = 100
        N = 1_000_000
        p = 1_000_000
        q = 100
        eta = 0.1
    """,
    # A handful of hospitals, large models; case 3 adds data and drops clients.
    "hospital-case-1": """
        name = hospital-case-1
        K = 10
        N = 100_000_000
        p = 1_000_000
        q = 1_000
        eta = 0.01
    """,
    "hospital-case-2": """
        name = hospital-case-2
        K = 20
        N = 100_000_000
        p = 1_000_000
        q = 1_000
        eta = 0.01
    """,
    "hospital-case-3": """
        name = hospital-case-3
        K = 5
        N = 100_000_000
        p = 10_000_000
        q = 1_000
        eta = 0.01
    """,
    # Biobank-scale consortia: many clients, big models, big datasets.
    "biobank-case-1": """
        name = biobank-case-1
        K = 10_000
        N = 100_000_000
        p = 1_000_000
        q = 1_000
        eta = 0.01
    """,
    "biobank-case-2": """
        name = biobank-case-2
        K = 5_000
        N = 50_000_000
        p = 1_000_000
        q = 1_000
        eta = 0.01
    """,
    "biobank-case-3": """
        name = biobank-case-3
        K = 1_000
        N = 10_000_000
        p = 5_000_000
        q = 1_000
        eta = 0.01
    """,
    # Small model-form scenario that simulates in milliseconds.
    "tiny-dense": """
        name = tiny-dense
        layer_widths = 4, 3, 2
        cut_index = 1
        K = 2
        p = 6
        epochs = 1
        seed = 42
        variant = sync
    """,
}

BUILTIN_SUITES = {
    "smartwatch": ("smartwatch-case-1", "smartwatch-case-2", "smartwatch-case-3"),
    "hospital": ("hospital-case-1", "hospital-case-2", "hospital-case-3"),
    "biobank": ("biobank-case-1", "biobank-case-2", "biobank-case-3"),
}

# Bare suite names double as shorthand for their first case in single-scenario
# commands.
_SUITE_ALIAS = {suite: cases[0] for suite, cases in BUILTIN_SUITES.items()}


def builtin_names() -> list[str]:
    return sorted(_BUILTIN_TEXT) + sorted(_SUITE_ALIAS)


def load_scenario(source: str) -> Scenario:
    """Load a scenario from a file path or a built-in name.

    An existing file wins over a built-in of the same name.
    """
    if os.path.exists(source):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario file {source!r}: {exc}") from exc
        name_hint = os.path.splitext(os.path.basename(source))[0]
        return parse_scenario_text(text, name_hint=name_hint)
    name = _SUITE_ALIAS.get(source, source)
    if name in _BUILTIN_TEXT:
        return parse_scenario_text(_BUILTIN_TEXT[name], name_hint=name)
    raise ScenarioError(
        f"{source!r} is neither a scenario file nor a built-in name "
        f"(built-ins: {', '.join(builtin_names())})"
    )


def load_suite(source: str) -> list[Scenario]:
    """Resolve a suite name to its case list; single scenarios become one-item suites."""
    if source in BUILTIN_SUITES and not os.path.exists(source):
        return [load_scenario(name) for name in BUILTIN_SUITES[source]]
    return [load_scenario(source)]
