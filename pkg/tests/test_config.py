from __future__ import annotations

import numpy as np
import pytest
from plumbum import local

from smio.cli import SMIOEnv, load_config
from smio.cli.config import DEFAULTS, ExperimentConfig
from smio.errors import ConfigError, UnknownSystemError

TOY_INLINE = """\
[experiment]
system = inline
horizon = 50
seeds = 3, 4
out = results

[observer]
grid_res_local = 2
model_window = none
prune_dominated = yes

[system]
name = inline_toy
n = 1
p = 1
m = 1
l = 1
f1 = "0.5*x1 + 0.2*d1 + w1"
g1 = "x1 + v1"
h1 = '0.5*d1'
x_lo = -5
x_hi = 5
d_lo = -1
d_hi = 1
w_lo = -0.1
w_hi = 0.1
v_lo = -0.1
v_hi = 0.1
x0_lo = -1
x0_hi = 1
jac_lo = 0.5, 0.2, 0, 1
jac_hi = 0.5, 0.2, 0, 1
lipschitz_g = 1.5
lipschitz_h = 0.5
"""


def write(name, text):
    path = local.cwd / name
    path.write(text, encoding="utf-8")
    return path


def no_env():
    return SMIOEnv({"HOME": "/nowhere"})


class TestDefaults:
    def test_no_file(self):
        config = load_config(env=no_env())
        assert config.system.name == DEFAULTS["system"]
        assert config.horizon == 500
        assert config.seeds == (0,)
        assert config.stability_mode == "oracle"
        assert config.out.name == "smio-out"
        assert config.observer.grid_res_global == 2

    def test_missing_file(self, cleandir):
        with pytest.raises(ConfigError):
            load_config("nope.ini", env=no_env())


class TestInlineSystem:
    def test_toy(self, cleandir):
        config = load_config(write("toy.ini", TOY_INLINE), env=no_env())
        spec = config.system
        assert spec.name == "inline_toy"
        assert (spec.n, spec.p, spec.m, spec.l) == (1, 1, 1, 1)
        assert spec.f([1.0, 1.0, 0.0, 0.1]) == pytest.approx([0.8])
        assert spec.h_oracle([0.0, 1.0, 0.0, 0.0]) == pytest.approx([0.5])
        assert spec.x0_box.hi.tolist() == [1.0]
        assert spec.d0_box == spec.spaces.d
        assert spec.spaces.u.lo.tolist() == [0.0]
        # derived from the Jacobian bounds when not given
        assert spec.lipschitz_f == pytest.approx([np.sqrt(0.25 + 0.04 + 1.0)])
        assert config.horizon == 50
        assert config.seeds == (3, 4)
        assert config.observer.grid_res_local == 2
        assert config.observer.model_window is None
        assert config.observer.prune_dominated
        assert config.source.name == "toy.ini"

    def test_missing_expression(self, cleandir):
        text = TOY_INLINE.replace('g1 = "x1 + v1"\n', "")
        with pytest.raises(ConfigError):
            load_config(write("toy.ini", text), env=no_env())

    def test_crossed_box(self, cleandir):
        text = TOY_INLINE.replace("x_lo = -5", "x_lo = 6")
        with pytest.raises(ConfigError):
            load_config(write("toy.ini", text), env=no_env())

    def test_half_box(self, cleandir):
        text = TOY_INLINE.replace("x0_hi = 1\n", "")
        with pytest.raises(ConfigError):
            load_config(write("toy.ini", text), env=no_env())

    def test_bad_expression(self, cleandir):
        text = TOY_INLINE.replace('"x1 + v1"', '"x1 + y1"')
        with pytest.raises(ConfigError) as info:
            load_config(write("toy.ini", text), env=no_env())
        assert "y1" in str(info.value)

    def test_bad_dimension(self, cleandir):
        text = TOY_INLINE.replace("n = 1", "n = 0")
        with pytest.raises(ConfigError):
            load_config(write("toy.ini", text), env=no_env())

    def test_jacobian_shape(self, cleandir):
        text = TOY_INLINE.replace("jac_hi = 0.5, 0.2, 0, 1", "jac_hi = 0.5, 0.2, 0")
        with pytest.raises(ConfigError):
            load_config(write("toy.ini", text), env=no_env())

    def test_g_jacobian(self, cleandir):
        text = TOY_INLINE + "g_jac_lo = 1, 0, 0, 1\ng_jac_hi = 1, 0, 0, 1\n"
        spec = load_config(write("toy.ini", text), env=no_env()).system
        assert spec.g_jacobian_bounds.a.tolist() == [[1.0, 0.0, 0.0, 1.0]]
        assert load_config(write("toy.ini", TOY_INLINE), env=no_env()).system.g_jacobian_bounds is None

    def test_half_g_jacobian(self, cleandir):
        text = TOY_INLINE + "g_jac_lo = 1, 0, 0, 1\n"
        with pytest.raises(ConfigError):
            load_config(write("toy.ini", text), env=no_env())

    def test_without_oracle(self, cleandir):
        text = TOY_INLINE.replace("h1 = '0.5*d1'\n", "")
        config = load_config(write("toy.ini", text), env=no_env())
        assert config.system.h_oracle is None


class TestPrecedence:
    TEXT = "[experiment]\nsystem = toy_linear\nhorizon = 50\n[observer]\ntol_mu = 0.01\n"

    def test_file_over_default(self, cleandir):
        config = load_config(write("exp.ini", self.TEXT), env=no_env())
        assert config.horizon == 50
        assert config.observer.tol_mu == 0.01

    def test_env_over_file(self, cleandir):
        env = SMIOEnv(
            {
                "SMIO_HORIZON": "40",
                "SMIO_TOL_MU": "0.5",
                "SMIO_SEEDS": "7, 8",
                "SMIO_GRID_RES_JACOBIAN": "6",
            }
        )
        config = load_config(write("exp.ini", self.TEXT), env=env)
        assert config.horizon == 40
        assert config.observer.tol_mu == 0.5
        assert config.seeds == (7, 8)
        assert config.observer.grid_res_jacobian == 6

    def test_switch_over_env(self, cleandir):
        env = SMIOEnv({"SMIO_HORIZON": "40"})
        config = load_config(write("exp.ini", self.TEXT), env=env, horizon=30, seeds=None)
        assert config.horizon == 30
        assert config.seeds == (0,)

    def test_bad_env_value(self):
        with pytest.raises(ConfigError):
            load_config(env=SMIOEnv({"SMIO_HORIZON": "many"}))


class TestValidation:
    def test_horizon(self):
        with pytest.raises(ConfigError):
            load_config(env=no_env(), horizon=0)

    def test_stability_mode(self):
        with pytest.raises(ConfigError):
            load_config(env=no_env(), stability_mode="both")

    def test_observer_values(self, cleandir):
        path = write("exp.ini", "[observer]\nprune_dominated = maybe\n")
        with pytest.raises(ConfigError):
            load_config(path, env=no_env())
        path = write("exp.ini", "[observer]\nmax_mu_iters = 0\n")
        with pytest.raises(ConfigError):
            load_config(path, env=no_env())

    def test_unknown_system(self, cleandir):
        path = write("exp.ini", "[experiment]\nsystem = lorenz\n")
        with pytest.raises(UnknownSystemError):
            load_config(path, env=no_env())

    def test_seeds_required(self, toy):
        with pytest.raises(ConfigError):
            ExperimentConfig(toy, seeds=())


class TestEnv:
    def test_overrides(self):
        env = SMIOEnv({"SMIO_MODEL_WINDOW": "20", "SMIO_OUT": "elsewhere", "PATH": "/bin"})
        assert env.overrides() == {"model_window": 20, "out": "elsewhere"}
        assert env.model_window == 20
        assert env.horizon is None

    def test_empty_environment(self):
        assert SMIOEnv({}).overrides() == {}

    def test_csv_seeds(self):
        assert SMIOEnv({"SMIO_SEEDS": "1,2, 3"}).seeds == [1, 2, 3]
