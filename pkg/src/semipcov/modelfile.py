"""JSON representation of covariance models.

A model is a plain dict with a ``variant`` key and variant-specific fields::

    {"variant": "semiparam", "d": 2,
     "marginals": [{"sigma2": 1, "a": 1, "nu": 3, "nugget": 0}, ...],
     "delta_knot": 1, "omega_t": 4.5, "m": 380,
     "coefficients": {"1_2": [b_-3, ..., b_K]}}

Reference variants use ``a12``/``nu12``/``rho12`` (bimatern), ``a`` and a
``rho`` matrix (parsimonious), or ``B`` and ``latent`` marginals (lmc).
Missing entries fall back to neutral defaults so that a short config is a
valid fitting template.
"""

from itertools import combinations

import numpy as np

from .bspline import KnotConfig
from .covariance import LMC, BivariateMatern, IndependentMatern, ParsimoniousMatern, SemiparamModel
from .spectral import FrequencyGrid, MarginalParams, SplineCoherenceSpec

VARIANTS = ("semiparam", "bimatern", "parsimonious", "lmc", "independent")


class ModelSpecError(ValueError):
    """Invalid model description; the message names the offending key."""


def _marginal(spec, where):
    try:
        return MarginalParams(
            sigma=float(np.sqrt(float(spec.get("sigma2", 1.0)))),
            a=float(spec.get("a", 1.0)),
            nu=float(spec.get("nu", 1.0)),
            nugget=float(spec.get("nugget", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ModelSpecError(f"{where}: {exc}") from None


def _marginal_dict(m):
    return {"sigma2": m.sigma ** 2, "a": m.a, "nu": m.nu, "nugget": m.nugget}


def _marginals(spec, p, key="marginals"):
    margs = spec.get(key)
    if margs is None:
        if p is None:
            raise ModelSpecError(f"model.{key}: missing (and number of components unknown)")
        margs = [{}] * p
    if not isinstance(margs, list):
        raise ModelSpecError(f"model.{key}: expected a list")
    return tuple(_marginal(m, f"model.{key}[{i}]") for i, m in enumerate(margs))


def knot_config(spec):
    """Knot configuration from ``omega_t`` and either ``delta_knot`` or ``K``."""
    try:
        wt = float(spec["omega_t"])
    except KeyError:
        raise ModelSpecError("model.omega_t: missing") from None
    if "delta_knot" in spec:
        return KnotConfig.from_spacing(float(spec["delta_knot"]), wt)
    if "K" in spec:
        K = int(spec["K"])
        return KnotConfig(wt / (K + 1), K, wt)
    raise ModelSpecError("model: need delta_knot or K")


def model_from_dict(spec, p=None):
    """Build a model from its dict description.

    ``p`` (the number of data components) is used when the description does
    not list its marginals.
    """
    if not isinstance(spec, dict):
        raise ModelSpecError("model: expected an object")
    variant = spec.get("variant", "semiparam")
    if variant not in VARIANTS:
        raise ModelSpecError(f"model.variant: {variant!r} not one of {VARIANTS}")
    d = int(spec.get("d", 2))
    try:
        if variant == "semiparam":
            margs = _marginals(spec, p)
            try:
                knots = knot_config(spec)
            except ValueError as exc:
                raise ModelSpecError(f"model: inconsistent knot configuration: {exc}") from None
            m = int(spec.get("m", 0))
            if m < 1:
                raise ModelSpecError("model.m: positive integer required")
            coeffs = {}
            given = spec.get("coefficients", {})
            for i, j in combinations(range(len(margs)), 2):
                key = f"{i + 1}_{j + 1}"
                b = given.get(key, 0.0)
                b = np.full(knots.n_basis, float(b)) if np.isscalar(b) else np.asarray(b, float)
                if b.shape != (knots.n_basis,):
                    raise ModelSpecError(f"model.coefficients.{key}: need {knots.n_basis} values")
                coeffs[(i, j)] = b
            return SemiparamModel(margs, SplineCoherenceSpec(knots, coeffs), FrequencyGrid(knots.omega_t, m), d)
        if variant == "independent":
            return IndependentMatern(_marginals(spec, p), d)
        if variant == "bimatern":
            margs = _marginals(spec, 2 if p is None else p)
            nu12 = float(spec.get("nu12", 0.5 * (margs[0].nu + margs[1].nu) + 0.5))
            return BivariateMatern(margs, float(spec.get("a12", 1.0)), nu12,
                                   float(spec.get("rho12", 0.0)), d)
        if variant == "parsimonious":
            margs = _marginals(spec, p)
            q = len(margs)
            rho = np.asarray(spec.get("rho", np.eye(q)), dtype=float)
            return ParsimoniousMatern([m.sigma for m in margs], [m.nu for m in margs],
                                      float(spec.get("a", 1.0)), rho,
                                      [m.nugget for m in margs], d)
        # lmc
        latent = _marginals(spec, p, key="latent")
        q = len(latent) if p is None else p
        B = np.asarray(spec.get("B", np.eye(q, len(latent))), dtype=float)
        nug = spec.get("nugget", [0.0] * B.shape[0])
        return LMC(B, latent, tuple(float(v) for v in nug), d)
    except ModelSpecError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ModelSpecError(f"model ({variant}): {exc}") from None


def model_to_dict(model):
    """Inverse of :func:`model_from_dict` (lossless for all variants)."""
    out = {"variant": model.variant, "d": model.d}
    if isinstance(model, SemiparamModel):
        kc = model.coh.knots
        out.update(
            marginals=[_marginal_dict(m) for m in model.marginals],
            delta_knot=kc.delta, K=kc.K, omega_t=kc.omega_t, m=model.grid.m,
            knot_indices=[int(k) for k in kc.indices],
            coefficients={f"{i + 1}_{j + 1}": [float(v) for v in model.coh[i, j]]
                          for i, j in model.coh.pairs()},
        )
    elif isinstance(model, IndependentMatern):
        out["marginals"] = [_marginal_dict(m) for m in model.marginals]
    elif isinstance(model, BivariateMatern):
        out.update(marginals=[_marginal_dict(m) for m in model.marginals],
                   a12=model.a12, nu12=model.nu12, rho12=model.rho12)
    elif isinstance(model, ParsimoniousMatern):
        out.update(
            marginals=[{"sigma2": s ** 2, "a": model.a, "nu": nu, "nugget": g}
                       for s, nu, g in zip(model.sigmas, model.nus, model.nugget)],
            a=model.a, rho=model.rho.tolist())
    elif isinstance(model, LMC):
        out.update(B=model.B.tolist(), latent=[_marginal_dict(z) for z in model.latent],
                   nugget=list(model.nugget))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return out
