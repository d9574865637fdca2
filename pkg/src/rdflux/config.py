"""Run configuration: a flat ``key = value`` text format with defaults.

Unknown keys are rejected with line numbers; rendering and parsing round-trip
exactly, and the rendered form (with all defaults filled in) is echoed into
every report for reproducibility.
"""

from dataclasses import dataclass, fields, replace

AUDIT_NAMES = (
    "conservation",
    "flux-recovery",
    "entropy",
    "max-principle",
    "truncation",
    "convergence",
    "decomposition",
)

_SCHEMES = (
    "galerkin",
    "supg",
    "jump",
    "dg",
    "rusanov",
    "nscheme",
    "limited-supg",
    "limited-jump",
    "dgrds-o1",
    "dgrds-o2",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    problem: str = "advection"
    scheme: str = "nscheme"
    degree: int = 1
    nx: int = 8
    ny: int = 8
    rect: tuple = (0.0, 0.0, 1.0, 1.0)
    mesh_file: str = ""
    tol: float = 1e-10
    max_iter: int = 100000
    nu: float = 0.9
    theta_e: float = 0.01
    theta_k: float = 1.0
    alpha: str = "auto"
    low_order: str = "auto"
    init: str = "characteristic"
    audits: tuple = ()
    output_dir: str = "out"
    seed: int = 0
    emit_history: bool = False

    def alpha_value(self):
        return None if self.alpha == "auto" else float(self.alpha)

    def validate(self):
        if self.scheme not in _SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.degree not in (1, 2):
            raise ConfigError(f"degree must be 1 or 2, got {self.degree}")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("nx and ny must be >= 1")
        x0, y0, x1, y1 = self.rect
        if not (x1 > x0 and y1 > y0):
            raise ConfigError(f"degenerate rect {self.rect!r}")
        if self.tol <= 0.0:
            raise ConfigError(f"tol must be positive, got {self.tol:g}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if not (0.0 < self.nu <= 1.0):
            raise ConfigError(f"nu must be in (0, 1], got {self.nu:g}")
        if self.theta_e < 0 or self.theta_k < 0:
            raise ConfigError("theta_e and theta_k must be >= 0")
        if self.alpha != "auto":
            try:
                float(self.alpha)
            except ValueError:
                raise ConfigError(f"alpha must be 'auto' or a number, got {self.alpha!r}")
        if self.low_order not in ("auto", "nscheme", "rusanov"):
            raise ConfigError(f"low_order must be auto|nscheme|rusanov")
        if self.init not in ("characteristic", "mean", "exact"):
            raise ConfigError(f"init must be characteristic|mean|exact")
        for a in self.audits:
            if a not in AUDIT_NAMES:
                raise ConfigError(f"unknown audit {a!r}; choose from {AUDIT_NAMES}")
        return self


def _parse_value(name, ftype, raw, lineno):
    try:
        if ftype is int:
            return int(raw)
        if ftype is float:
            return float(raw)
        if ftype is bool:
            if raw.lower() in ("true", "1", "yes", "on"):
                return True
            if raw.lower() in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        if name == "rect":
            parts = raw.split()
            if len(parts) != 4:
                raise ValueError("expected 4 numbers")
            return tuple(float(p) for p in parts)
        if name == "audits":
            items = tuple(p.strip() for p in raw.split(",") if p.strip())
            return items
        return raw
    except ValueError as exc:
        raise ConfigError(f"line {lineno}: bad value for {name!r}: {exc}") from None


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (UTF-8, '#' comments) into a RunConfig."""
    ftypes = {f.name: f.type for f in fields(RunConfig)}
    pytypes = {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}
    cfg = RunConfig()
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in stripped.split("=", 1))
        if key not in ftypes:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        cfg = replace(cfg, **{key: _parse_value(key, pytypes[key], raw, lineno)})
    try:
        return cfg.validate()
    except ConfigError:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        raise ConfigError(str(exc)) from None


def render_config(cfg: RunConfig) -> str:
    """Render with every field explicit; parse(render(cfg)) == cfg."""
    lines = []
    for f in fields(RunConfig):
        val = getattr(cfg, f.name)
        if f.name == "rect":
            raw = " ".join("%.17g" % v for v in val)
        elif f.name == "audits":
            raw = ",".join(val)
        elif isinstance(val, bool):
            raw = "true" if val else "false"
        elif isinstance(val, float):
            raw = "%.17g" % val
        else:
            raw = str(val)
        lines.append(f"{f.name} = {raw}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
