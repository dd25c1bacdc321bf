"""Processor energy model with discrete DVFS levels and one zero-power sleep
state.

Internal units are SI (Hz, W, J, s). The platform text format uses GHz, mW,
uJ and ms and is converted on load.
"""

from __future__ import annotations

import bisect
import os
from dataclasses import dataclass, replace
from importlib import resources

TIME_TOL = 1e-9  # seconds


class PowerModelError(ValueError):
    pass


@dataclass(frozen=True)
class PowerModel:
    """Power P(f) = a f^alpha + b f + c with a discrete frequency set.

    ``a`` and ``b`` are kept in the units the fit is usually quoted in
    (mW/GHz^alpha and mW/GHz). ``pdep`` optionally holds the measured
    frequency-dependent power (W) at each level; when present it is used
    instead of the fit at those levels.
    """

    freqs: tuple[float, ...]
    c: float
    e_sw: float
    t_sw: float
    pdep: tuple[float, ...] | None = None
    a: float | None = None
    b: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "freqs", tuple(float(f) for f in self.freqs))
        if self.pdep is not None:
            object.__setattr__(self, "pdep", tuple(float(p) for p in self.pdep))
        if not self.freqs:
            raise PowerModelError("need at least one frequency")
        if any(f <= 0 for f in self.freqs):
            raise PowerModelError("frequencies must be positive")
        if any(f2 <= f1 for f1, f2 in zip(self.freqs, self.freqs[1:])):
            raise PowerModelError("frequencies must be strictly ascending")
        if min(self.c, self.e_sw, self.t_sw) < 0:
            raise PowerModelError("c, e_sw and t_sw must be nonnegative")
        has_fit = self.a is not None
        if has_fit:
            if self.b is None or self.alpha is None:
                raise PowerModelError("fit needs a, b and alpha together")
            if self.a < 0 or self.b < 0 or not self.alpha > 1:
                raise PowerModelError("fit needs a, b >= 0 and alpha > 1")
        if self.pdep is None and not has_fit:
            raise PowerModelError("need a power table or a fit")
        if self.pdep is not None:
            if len(self.pdep) != len(self.freqs):
                raise PowerModelError("power table length differs from frequency count")
            if any(p < 0 for p in self.pdep):
                raise PowerModelError("table powers must be nonnegative")

    @property
    def m(self) -> int:
        return len(self.freqs)

    @property
    def f_max(self) -> float:
        return self.freqs[-1]

    @property
    def f_min(self) -> float:
        return self.freqs[0]

    @property
    def t_be(self) -> float:
        return break_even(self)

    @property
    def cycle_energies(self) -> tuple[float, ...]:
        cache = self.__dict__.get("_cycle_energies")
        if cache is None:
            cache = tuple(self._power_level(i) / f for i, f in enumerate(self.freqs))
            object.__setattr__(self, "_cycle_energies", cache)
        return cache

    def _power_level(self, i: int) -> float:
        if self.pdep is not None:
            return self.pdep[i] + self.c
        return _fit_power(self, self.freqs[i])

    def index_of(self, f: float) -> int:
        for i, g in enumerate(self.freqs):
            if abs(g - f) <= 1e-9 * g:
                return i
        raise PowerModelError(f"{f} Hz is not an available frequency")

    def fitted(self) -> "PowerModel":
        """Same platform with the table dropped, so the fit drives everything."""
        if self.a is None:
            raise PowerModelError("model has no fit")
        return replace(self, pdep=None)

    def restricted(self, indices) -> "PowerModel":
        """Keep only the listed frequency levels (0-based)."""
        idx = sorted(indices)
        return replace(
            self,
            freqs=tuple(self.freqs[i] for i in idx),
            pdep=None if self.pdep is None else tuple(self.pdep[i] for i in idx),
        )


def _fit_power(model: PowerModel, f: float) -> float:
    ghz = f / 1e9
    return 1e-3 * (model.a * ghz**model.alpha + model.b * ghz) + model.c


def power_at(model: PowerModel, f: float) -> float:
    """Total power (W) at frequency f (Hz)."""
    if not f > 0:
        raise PowerModelError("frequency must be positive")
    if model.pdep is not None:
        for i, g in enumerate(model.freqs):
            if abs(g - f) <= 1e-9 * g:
                return model.pdep[i] + model.c
    if model.a is None:
        raise PowerModelError(f"no fit available to evaluate power at {f} Hz")
    return _fit_power(model, f)


def energy_per_cycle(model: PowerModel, f: float) -> float:
    """Joules per cycle at an available frequency: P(f)/f."""
    return model.cycle_energies[model.index_of(f)]


def break_even(model: PowerModel) -> float:
    """Shortest idle time for which sleeping is possible and pays off.

    With c = 0 staying awake is free, so only the transition time matters.
    """
    if model.c == 0:
        return model.t_sw
    return max(model.t_sw, model.e_sw / model.c)


def idle_energy(model: PowerModel, length: float, period: float) -> float:
    """Energy of one idle interval under the best sleep decision."""
    if length < -TIME_TOL or length > period + TIME_TOL:
        raise PowerModelError(f"idle length {length} outside [0, {period}]")
    if length >= period - TIME_TOL:
        return 0.0
    if switchable(model, length):
        return model.e_sw
    return model.c * max(length, 0.0)


def switchable(model: PowerModel, length: float) -> bool:
    """Sleeping is allowed once the idle time reaches the break-even time."""
    return length >= model.t_be - TIME_TOL


def idle_cost(model: PowerModel, length: float, switched: bool) -> float:
    """Energy of an idle interval (shorter than the period) for a given decision."""
    return model.e_sw if switched else model.c * max(length, 0.0)


# ---------------------------------------------------------------------------
# execution energy as a function of duration


@dataclass(frozen=True)
class EnergyEnvelope:
    """Lower convex envelope of (duration, energy) over frequency mixes for a
    fixed workload. Breakpoints run from the fastest to the slowest level."""

    workload: float
    breakpoints: tuple[tuple[float, float], ...]
    levels: tuple[int, ...]  # frequency index behind each breakpoint

    @property
    def d_min(self) -> float:
        return self.breakpoints[0][0]

    @property
    def d_max(self) -> float:
        return self.breakpoints[-1][0]

    def energy_at(self, duration: float) -> float:
        pts = self.breakpoints
        if duration < pts[0][0] - TIME_TOL or duration > pts[-1][0] + TIME_TOL:
            raise PowerModelError(f"duration {duration} outside [{pts[0][0]}, {pts[-1][0]}]")
        if len(pts) == 1:
            return pts[0][1]
        d = min(max(duration, pts[0][0]), pts[-1][0])
        xs = [p[0] for p in pts]
        j = min(max(bisect.bisect_right(xs, d) - 1, 0), len(pts) - 2)
        (x0, y0), (x1, y1) = pts[j], pts[j + 1]
        return y0 + (y1 - y0) * (d - x0) / (x1 - x0)

    def split_at(self, duration: float) -> dict[int, float]:
        """Cycle counts per frequency index realising energy_at(duration)."""
        pts = self.breakpoints
        d = min(max(duration, pts[0][0]), pts[-1][0])
        if len(pts) == 1:
            return {self.levels[0]: self.workload}
        xs = [p[0] for p in pts]
        j = min(max(bisect.bisect_right(xs, d) - 1, 0), len(pts) - 2)
        (x0, _), (x1, _) = pts[j], pts[j + 1]
        w1 = (d - x0) / (x1 - x0)
        out = {self.levels[j]: self.workload * (1 - w1)}
        if w1 > 0:
            out[self.levels[j + 1]] = self.workload * w1
        return out

    def slopes(self) -> list[float]:
        pts = self.breakpoints
        return [(y1 - y0) / (x1 - x0) for (x0, y0), (x1, y1) in zip(pts, pts[1:])]


def exec_envelope(model: PowerModel, workload: float) -> EnergyEnvelope:
    if workload < 1:
        raise PowerModelError("workload must be >= 1 cycle")
    pts = [
        (workload / f, workload * e, i)
        for i, (f, e) in reversed(list(enumerate(zip(model.freqs, model.cycle_energies))))
    ]
    hull: list[tuple[float, float, int]] = []
    for p in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    return EnergyEnvelope(
        workload=workload,
        breakpoints=tuple((d, e) for d, e, _ in hull),
        levels=tuple(i for _, _, i in hull),
    )


def _cross(o, a, b) -> float:
    # > 0 when o -> a -> b turns counter-clockwise (keeps the lower hull)
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


# ---------------------------------------------------------------------------
# platform config


@dataclass(frozen=True)
class Platform:
    power: PowerModel
    processors: int = 4


class PlatformParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def load_platform(text: str) -> Platform:
    header = False
    c = e_sw = t_sw = None
    freqs: list[float] = []
    pdep: list[float | None] = []
    fit: dict[str, float] = {}
    processors = 4
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if not header:
            if parts != ["platform", "v1"]:
                raise PlatformParseError(lineno, "expected header 'platform v1'")
            header = True
            continue
        try:
            key = parts[0]
            if key == "c" and len(parts) == 2:
                c = float(parts[1]) * 1e-3
            elif key == "freq" and len(parts) in (2, 3):
                freqs.append(float(parts[1]) * 1e9)
                pdep.append(float(parts[2]) * 1e-3 if len(parts) == 3 else None)
            elif key == "fit" and len(parts) == 7:
                fit = {parts[i]: float(parts[i + 1]) for i in (1, 3, 5)}
                if set(fit) != {"a", "b", "alpha"}:
                    raise PlatformParseError(lineno, "fit needs 'a', 'b' and 'alpha'")
            elif key == "esw" and len(parts) == 2:
                e_sw = float(parts[1]) * 1e-6
            elif key == "tsw" and len(parts) == 2:
                t_sw = float(parts[1]) * 1e-3
            elif key == "processors" and len(parts) == 2:
                processors = int(parts[1])
            else:
                raise PlatformParseError(lineno, f"cannot parse {line!r}")
        except ValueError as exc:
            if isinstance(exc, PlatformParseError):
                raise
            raise PlatformParseError(lineno, f"cannot parse {line!r}") from None
    if not header:
        raise PlatformParseError(1, "empty platform file")
    for name, val in (("c", c), ("esw", e_sw), ("tsw", t_sw)):
        if val is None:
            raise PlatformParseError(0, f"missing '{name}' line")
    if any(p is None for p in pdep) and not all(p is None for p in pdep):
        raise PlatformParseError(0, "either every or no 'freq' line carries a power value")
    table = None if not pdep or pdep[0] is None else tuple(pdep)
    try:
        model = PowerModel(
            freqs=tuple(freqs), c=c, e_sw=e_sw, t_sw=t_sw, pdep=table,
            a=fit.get("a"), b=fit.get("b"), alpha=fit.get("alpha"),
        )
    except PowerModelError as exc:
        raise PlatformParseError(0, str(exc)) from None
    if processors < 1:
        raise PlatformParseError(0, "processors must be >= 1")
    return Platform(model, processors)


def save_platform(platform: Platform) -> str:
    m = platform.power
    lines = ["platform v1", f"c {m.c * 1e3:.12g}"]
    for i, f in enumerate(m.freqs):
        tail = "" if m.pdep is None else f" {m.pdep[i] * 1e3:.12g}"
        lines.append(f"freq {f / 1e9:.12g}{tail}")
    if m.a is not None:
        lines.append(f"fit a {m.a:.12g} b {m.b:.12g} alpha {m.alpha:.12g}")
    lines += [f"esw {m.e_sw * 1e6:.12g}", f"tsw {m.t_sw * 1e3:.12g}", f"processors {platform.processors}"]
    return "\n".join(lines) + "\n"


PLATFORM_ENV = "ISCT_PLATFORM"


def default_platform() -> Platform:
    """Platform from $ISCT_PLATFORM, else the bundled reference platform."""
    path = os.environ.get(PLATFORM_ENV)
    if path:
        with open(path) as fh:
            return load_platform(fh.read())
    return load_platform(resources.files("isct.data").joinpath("platform.txt").read_text())


def reference_platform() -> Platform:
    return load_platform(resources.files("isct.data").joinpath("platform.txt").read_text())
