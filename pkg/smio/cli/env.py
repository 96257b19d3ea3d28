from __future__ import annotations

from plumbum.typed_env import EnvironmentVariableError, TypedEnv


class SMIOEnv(TypedEnv):
    """Environment overrides of the experiment configuration.

    Every variable is optional; unset variables read as ``None``.
    """

    horizon = TypedEnv.Int("SMIO_HORIZON", default=None)
    seeds = TypedEnv.CSV("SMIO_SEEDS", default=None, type=int)
    out = TypedEnv.Str("SMIO_OUT", default=None)
    stability_mode = TypedEnv.Str("SMIO_STABILITY_MODE", default=None)
    grid_res_global = TypedEnv.Int("SMIO_GRID_RES_GLOBAL", default=None)
    grid_res_local = TypedEnv.Int("SMIO_GRID_RES_LOCAL", default=None)
    grid_res_jacobian = TypedEnv.Int("SMIO_GRID_RES_JACOBIAN", default=None)
    tol_mu = TypedEnv.Float("SMIO_TOL_MU", default=None)
    max_mu_iters = TypedEnv.Int("SMIO_MAX_MU_ITERS", default=None)
    model_window = TypedEnv.Int("SMIO_MODEL_WINDOW", default=None)

    def overrides(self):
        """The variables that are set, as a ``{key: value}`` dict.

        :raises ValueError: when a set variable does not convert
        """
        values = {}
        for key in sorted(self._defined_keys):
            var = getattr(type(self), key)
            # read through the descriptor's own converter; an empty mapping
            # would otherwise hand back the descriptor itself
            try:
                values[key] = var.convert(self._raw_get(*var.names))
            except EnvironmentVariableError:
                continue
        return values
