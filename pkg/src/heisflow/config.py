"""Run configuration (sectioned key=value files + flag overrides) and the run manifest."""

import configparser
import json
import os
import time


class ConfigError(ValueError):
    """Invalid or missing configuration; maps to exit code 2."""


_SCHEMA = {
    # key: (type, default or REQUIRED)
    "grid.eps": (float, 1e-3),
    "grid.M": (float, 30.0),
    "grid.N": (int, 1024),
    "rgrid.delta_inv": (int, 32),        # lattice step 1/delta_inv
    "rgrid.p_lo": (int, 1),
    "rgrid.p_hi": (int, 256),
    "rgrid.k_max": (int, 8),
    "rgrid.n_s": (int, 1024),
    "run.n": (int, 8),
    "run.tol": (float, 1e-9),
    "run.dt": (float, 1e-3),
    "run.t_final": (float, 1.0),
    "run.sample_every": (int, 100),
    "run.seed": (int, None),
    "run.beta": (float, None),
    "run.betas": (str, None),            # comma list
    "run.gammas": (str, None),
    "run.r": (float, 0.03),
    "run.r2": (float, 1e-3),
    "run.r_values": (str, "0.01,0.05,0.1"),
    "run.samples": (int, 48),
    "run.mode": (str, "tube"),
    "run.input": (str, None),
    "run.x_s": (float, 0.0),
    "run.x_theta": (float, 0.0),
    "run.x_alpha": (float, 1.0),
    "run.threshold": (float, None),
    "run.dist_cap": (float, 0.1),
    "run.conservation_tol": (float, 1e-6),
    "run.slope_window_lo": (float, 0.8),
    "run.slope_window_hi": (float, 1.3),
    "run.r_slope_floor": (float, 1.5),
}


class RunConfig:
    """Validated flat configuration: values addressed as section.key."""

    def __init__(self, values):
        self.values = values

    @classmethod
    def load(cls, path=None, overrides=()):
        values = {}
        if path is not None:
            if not os.path.exists(path):
                raise ConfigError(f"config file not found: {path}")
            parser = configparser.ConfigParser()
            parser.read(path)
            for section in parser.sections():
                for key, raw in parser.items(section):
                    values[f"{section}.{key}"] = raw
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override must look like section.key=value: {item!r}")
            key, raw = item.split("=", 1)
            key = key.strip()
            if "." not in key:
                key = "run." + key
            values[key] = raw.strip()
        typed = {}
        for key, raw in values.items():
            if key not in _SCHEMA:
                raise ConfigError(f"unknown configuration key {key!r}")
            typ, _ = _SCHEMA[key]
            try:
                typed[key] = typ(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
        return cls(typed)

    def get(self, key, default_override=None):
        if key in self.values:
            return self.values[key]
        if default_override is not None:
            return default_override
        if key not in _SCHEMA:
            raise ConfigError(f"unknown configuration key {key!r}")
        return _SCHEMA[key][1]

    def require(self, key):
        val = self.get(key)
        if val is None:
            raise ConfigError(f"missing required configuration key {key!r}")
        return val

    def float_list(self, key):
        raw = self.require(key)
        try:
            out = [float(tok) for tok in str(raw).split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad list for {key}: {raw!r}") from exc
        if not out:
            raise ConfigError(f"empty list for {key}")
        return out

    def echo(self):
        out = {k: v for k, v in self.values.items()}
        return out


class RunManifest:
    """Accumulates config echo, derived constants, tolerances, timings, and checks."""

    def __init__(self, command, config):
        from . import __version__
        self.data = {
            "command": command,
            "artifact_version": __version__,
            "config": config.echo(),
            "derived": {"heisenberg_unit_factor_pi": 3.141592653589793},
            "tolerances": {},
            "timings": {},
            "checks": {},
            "outputs": [],
        }
        self._start = time.time()

    def tolerance(self, name, value, source="default"):
        self.data["tolerances"][name] = {"value": value, "source": source}

    def derived(self, name, value):
        self.data["derived"][name] = value

    def check(self, name, passed, detail=None):
        self.data["checks"][name] = {"pass": bool(passed), "detail": detail}

    def output(self, path):
        self.data["outputs"].append(os.path.basename(path))

    def timing(self, name, seconds):
        self.data["timings"][name] = seconds

    @property
    def all_passed(self):
        return all(c["pass"] for c in self.data["checks"].values())

    def failing(self):
        return [k for k, c in self.data["checks"].items() if not c["pass"]]

    def write(self, out_dir):
        self.data["timings"]["total_wall_s"] = time.time() - self._start
        path = os.path.join(out_dir, "manifest.json")
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(self.data, fh, indent=2, default=_jsonable)
        os.replace(tmp, path)
        return path


def _jsonable(obj):
    try:
        return float(obj)
    except (TypeError, ValueError):
        return str(obj)
