"""Closed-form communication accounting for split versus federated training.

Everything is counted in scalars (one weight or one activation value); wire
bytes are scalars times ``bytes_per_scalar``. With K clients, N model
parameters, p dataset records, q scalars per record at the cut layer and
eta the client-side fraction of parameters, the per-epoch totals are

    split, with client weight sharing:   2*p*q + eta*N*K
    split, no client weight sharing:     2*p*q
    federated averaging:                 2*K*N

and the efficiency ratio rho = (federated total) / (split total) decides
the winner: rho > 1 favors split, rho < 1 favors federated. Setting
rho = 1 and solving for N gives the break-even hyperbola in the (K, N)
plane: N* = 2*p*q / ((2 - eta) * K) with weight sharing, N* = p*q / K
without.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .errors import DivisibilityError, InvalidParam, SplitFedError

# |rho - 1| within this relative band is a tie, so exact-integer break-even
# scenarios classify stably under float evaluation.
TIE_REL_TOL = 1e-12


class Method(str, Enum):
    SPLIT_SYNC = "SplitSync"
    SPLIT_NOSYNC = "SplitNoSync"
    FEDERATED = "Federated"


class Winner(str, Enum):
    SPLIT = "Split"
    FEDERATED = "Federated"
    TIE = "Tie"


def shard_sizes(dataset_size: int, clients: int, strict: bool = True) -> list[int]:
    """Records per client.

    Strict mode requires an even split; lenient mode hands the remainder to
    the first ``dataset_size % clients`` clients.
    """
    if clients < 1:
        raise InvalidParam(f"clients must be >= 1, got {clients}")
    if dataset_size < 0:
        raise InvalidParam(f"dataset_size must be >= 0, got {dataset_size}")
    base, rem = divmod(dataset_size, clients)
    if rem and strict:
        raise DivisibilityError(
            f"{dataset_size} records do not split evenly across {clients} clients"
        )
    return [base + 1 if k < rem else base for k in range(clients)]


@dataclass(frozen=True)
class ScenarioParams:
    """One point in the comparison space.

    ``client_fraction`` may be a ``Fraction`` (exact, as derived from a model
    cut) or a plain float for analytic studies. ``model_params`` is integral
    for anything that gets simulated; break-even round trips may pass a real
    value.
    """

    clients: int
    model_params: int | float
    dataset_size: int
    smashed_size: int
    client_fraction: float | Fraction
    bytes_per_scalar: int = 4
    epochs: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.clients, int) or self.clients < 1:
            raise InvalidParam(f"clients must be a positive integer, got {self.clients}")
        if self.model_params < 1:
            raise InvalidParam(f"model_params must be >= 1, got {self.model_params}")
        if not isinstance(self.dataset_size, int) or self.dataset_size < 0:
            raise InvalidParam(f"dataset_size must be a non-negative integer, got {self.dataset_size}")
        if not isinstance(self.smashed_size, int) or self.smashed_size < 1:
            raise InvalidParam(f"smashed_size must be a positive integer, got {self.smashed_size}")
        if not 0 <= self.client_fraction <= 1:
            raise InvalidParam(f"client_fraction must lie in [0, 1], got {self.client_fraction}")
        if not isinstance(self.bytes_per_scalar, int) or self.bytes_per_scalar < 1:
            raise InvalidParam(f"bytes_per_scalar must be a positive integer, got {self.bytes_per_scalar}")
        if not isinstance(self.epochs, int) or self.epochs < 1:
            raise InvalidParam(f"epochs must be a positive integer, got {self.epochs}")

    @classmethod
    def from_model(
        cls,
        spec,
        cut,
        clients: int,
        dataset_size: int,
        bytes_per_scalar: int = 4,
        epochs: int = 1,
    ) -> "ScenarioParams":
        """Derive (N, q, eta) from a dense network and a cut position.

        eta is stored as an exact rational so ledger comparisons stay
        integer-exact.
        """
        from . import nn_core

        q, eta = nn_core.cut_stats(spec, cut)
        return cls(
            clients=clients,
            model_params=nn_core.param_count(spec),
            dataset_size=dataset_size,
            smashed_size=q,
            client_fraction=eta,
            bytes_per_scalar=bytes_per_scalar,
            epochs=epochs,
        )

    @property
    def client_param_count(self) -> int:
        """Client-side weight count eta*N, exact when eta is rational.

        A bare float eta is rounded to the nearest integer; by construction
        nearest-rounding moves the value by at most half a scalar, and the
        guard below refuses anything farther.
        """
        if isinstance(self.client_fraction, Fraction):
            raw = self.client_fraction * Fraction(self.model_params)
            if raw.denominator == 1:
                return int(raw)
            nearest = round(raw)
            if abs(raw - nearest) > Fraction(1, 2):
                raise InvalidParam(f"client_fraction*model_params = {raw} is not near an integer")
            return int(nearest)
        raw = self.client_fraction * self.model_params
        nearest = round(raw)
        if abs(raw - nearest) > 0.5:
            raise InvalidParam(f"client_fraction*model_params = {raw} is not near an integer")
        return int(nearest)


@dataclass(frozen=True)
class CommReport:
    """Per-client and total traffic for one method, in scalars and bytes."""

    method: Method
    per_client_scalars: int
    total_scalars: int
    per_client_bytes: int
    total_bytes: int

    @classmethod
    def from_scalars(
        cls, method: Method, per_client: int, total: int, bytes_per_scalar: int
    ) -> "CommReport":
        return cls(
            method=method,
            per_client_scalars=per_client,
            total_scalars=total,
            per_client_bytes=per_client * bytes_per_scalar,
            total_bytes=total * bytes_per_scalar,
        )


@dataclass(frozen=True)
class EfficiencyReport:
    rho: float
    winner: Winner


@dataclass(frozen=True)
class BreakEvenCurve:
    """(K, N*) locus where rho = 1 for fixed (p, q, eta) and variant."""

    variant: Method
    dataset_size: int
    smashed_size: int
    client_fraction: float | Fraction
    points: tuple[tuple[int, float], ...]


def _as_count(x) -> int:
    """Nearest integer scalar count; exact for integral inputs."""
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else int(round(x))
    return int(round(x))


def split_comm_sync(
    params: ScenarioParams,
    strict: bool = True,
    include_labels: bool = False,
    label_width: int = 1,
) -> CommReport:
    """Traffic for split training with client weight sharing.

    Per client per epoch: 2*(p/K)*q activations+gradients plus one eta*N
    weight hand-off; totals 2*p*q + eta*N*K per epoch. Label records are
    excluded unless ``include_labels`` is set (adds (p/K)*label_width per
    client per epoch). In lenient mode the per-client figure reports the
    largest shard; the total is exact either way.
    """
    sizes = shard_sizes(params.dataset_size, params.clients, strict=strict)
    largest = max(sizes)
    cw = params.client_param_count
    q, p, k, e = params.smashed_size, params.dataset_size, params.clients, params.epochs
    per_client = 2 * largest * q + cw
    total = 2 * p * q + cw * k
    if include_labels:
        per_client += largest * label_width
        total += p * label_width
    return CommReport.from_scalars(
        Method.SPLIT_SYNC, per_client * e, total * e, params.bytes_per_scalar
    )


def split_comm_nosync(
    params: ScenarioParams,
    strict: bool = True,
    include_labels: bool = False,
    label_width: int = 1,
) -> CommReport:
    """Traffic for split training without client weight sharing: 2*p*q per epoch."""
    sizes = shard_sizes(params.dataset_size, params.clients, strict=strict)
    largest = max(sizes)
    q, p, e = params.smashed_size, params.dataset_size, params.epochs
    per_client = 2 * largest * q
    total = 2 * p * q
    if include_labels:
        per_client += largest * label_width
        total += p * label_width
    return CommReport.from_scalars(
        Method.SPLIT_NOSYNC, per_client * e, total * e, params.bytes_per_scalar
    )


def federated_comm(params: ScenarioParams) -> CommReport:
    """Traffic for federated averaging: one N download and one N upload per client per round."""
    n, k, e = params.model_params, params.clients, params.epochs
    per_client = _as_count(2 * n) * e
    total = _as_count(2 * k * n) * e
    return CommReport.from_scalars(Method.FEDERATED, per_client, total, params.bytes_per_scalar)


def efficiency_ratio(params: ScenarioParams, variant: Method) -> EfficiencyReport:
    """rho = federated total over split total, per epoch.

    Independent of epochs and of bytes_per_scalar since both methods scale
    identically. A zero split denominator (p = 0 with no weight sharing, or
    p = 0 and eta = 0) reports winner Split with rho = +inf.
    """
    k, n, p, q = params.clients, params.model_params, params.dataset_size, params.smashed_size
    eta = params.client_fraction
    if isinstance(eta, Fraction) and isinstance(n, int):
        numerator = Fraction(2 * n * k)
        sync_term = eta * n * k
    else:
        numerator = 2.0 * n * k
        sync_term = float(eta) * n * k
    if variant is Method.SPLIT_SYNC:
        denominator = 2 * p * q + sync_term
    elif variant is Method.SPLIT_NOSYNC:
        denominator = 2 * p * q
    else:
        raise InvalidParam(f"variant must be a split method, got {variant!r}")
    if denominator == 0:
        return EfficiencyReport(rho=math.inf, winner=Winner.SPLIT)
    rho = numerator / denominator
    rho_f = float(rho)
    if rho == 1 or abs(rho_f - 1.0) <= TIE_REL_TOL * max(1.0, abs(rho_f)):
        winner = Winner.TIE
    elif rho_f > 1.0:
        winner = Winner.SPLIT
    else:
        winner = Winner.FEDERATED
    return EfficiencyReport(rho=rho_f, winner=winner)


def break_even_model_size(
    dataset_size: int,
    smashed_size: int,
    clients: int,
    client_fraction: float | Fraction = 0.0,
    variant: Method = Method.SPLIT_SYNC,
) -> float:
    """Model size N* at which both methods move the same traffic.

    N* = 2*p*q / ((2 - eta) * K) with weight sharing, N* = p*q / K without.
    """
    if dataset_size < 1 or smashed_size < 1:
        raise InvalidParam("break-even is undefined for p = 0 or q = 0")
    if clients < 1:
        raise InvalidParam(f"clients must be >= 1, got {clients}")
    if variant is Method.SPLIT_SYNC:
        if not 0 <= client_fraction <= 1:
            raise InvalidParam(f"client_fraction must lie in [0, 1], got {client_fraction}")
        return 2.0 * dataset_size * smashed_size / ((2.0 - float(client_fraction)) * clients)
    if variant is Method.SPLIT_NOSYNC:
        return dataset_size * smashed_size / clients
    raise InvalidParam(f"variant must be a split method, got {variant!r}")


def break_even_curve(
    dataset_size: int,
    smashed_size: int,
    client_fraction: float | Fraction,
    clients_values: Sequence[int],
    variant: Method = Method.SPLIT_SYNC,
) -> BreakEvenCurve:
    """Evaluate the break-even hyperbola over a set of client counts."""
    if not clients_values:
        raise InvalidParam("clients_values must be non-empty")
    ks = sorted(set(int(k) for k in clients_values))
    points = tuple(
        (k, break_even_model_size(dataset_size, smashed_size, k, client_fraction, variant))
        for k in ks
    )
    return BreakEvenCurve(
        variant=variant,
        dataset_size=dataset_size,
        smashed_size=smashed_size,
        client_fraction=client_fraction,
        points=points,
    )


# Cartesian sweeps evaluate axes in this order, rightmost varying fastest.
SWEEP_FIELD_ORDER = (
    "clients",
    "model_params",
    "dataset_size",
    "smashed_size",
    "client_fraction",
    "bytes_per_scalar",
    "epochs",
)

_SWEEP_DEFAULTS = {"bytes_per_scalar": 4, "epochs": 1}


@dataclass(frozen=True)
class SweepRow:
    """One grid cell: parameters, all three reports, the ratio, or an error."""

    values: dict
    params: ScenarioParams | None
    reports: dict[Method, CommReport] | None
    efficiency: EfficiencyReport | None
    error: str | None


def sweep(
    grid: Mapping[str, object],
    variant: Method = Method.SPLIT_SYNC,
    strict: bool = True,
    include_labels: bool = False,
) -> list[SweepRow]:
    """Evaluate the Cartesian product of per-parameter value lists.

    Scalar grid entries count as single-value axes. Per-cell failures (for
    example a divisibility violation in strict mode) become row-level error
    markers; the sweep itself never aborts.
    """
    unknown = set(grid) - set(SWEEP_FIELD_ORDER)
    if unknown:
        raise InvalidParam(f"unknown sweep parameters: {sorted(unknown)}")
    axes = []
    for name in SWEEP_FIELD_ORDER:
        if name in grid:
            value = grid[name]
            values = list(value) if isinstance(value, (list, tuple)) else [value]
        elif name in _SWEEP_DEFAULTS:
            values = [_SWEEP_DEFAULTS[name]]
        else:
            raise InvalidParam(f"sweep grid is missing required parameter {name!r}")
        if not values:
            raise InvalidParam(f"sweep axis {name!r} is empty")
        axes.append(values)

    rows: list[SweepRow] = []
    for combo in product(*axes):
        values = dict(zip(SWEEP_FIELD_ORDER, combo))
        try:
            params = ScenarioParams(**values)
            reports = {
                Method.SPLIT_SYNC: split_comm_sync(params, strict, include_labels),
                Method.SPLIT_NOSYNC: split_comm_nosync(params, strict, include_labels),
                Method.FEDERATED: federated_comm(params),
            }
            efficiency = efficiency_ratio(params, variant)
        except SplitFedError as exc:
            rows.append(SweepRow(values, None, None, None, str(exc)))
            continue
        rows.append(SweepRow(values, params, reports, efficiency, None))
    return rows
