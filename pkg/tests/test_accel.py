import json
import os
import subprocess
import sys

import pytest

from modelgrowth import accel

PROBE = """
import json
from modelgrowth import accel
from modelgrowth.kernels import holt, smo, arima, nn
print(json.dumps({"backend": accel.backend(),
                  "holt": holt.holt_grid is holt.holt_grid_numpy,
                  "smo": smo.smo is smo.smo_numpy,
                  "arima": arima.css_sse is arima.css_sse_numpy,
                  "nn": nn.lstm_train is nn.lstm_train_numpy}))
"""

FIT = """
import json
import numpy as np
from modelgrowth.forecasters import ForecasterSpec, arima_fit, fit_forecaster
rng = np.random.default_rng(5)
y = np.cumsum(rng.normal(1.0, 1.0, 90)) + 50
out = {"ARIMA": arima_fit(y[:75], (1, 1, 1)).forecast(15).tolist()}
svr_grid = {"C": [1.0, 10.0], "gamma": [0.1], "epsilon": [0.01], "lag": [3]}
for kind, grid in (("HOLT", {}), ("SVR", svr_grid)):
    f = fit_forecaster(ForecasterSpec(kind, grid, 1, 1), y[:60], y[60:75], refit_history=y[:75])
    out[kind] = f.forecast(15).tolist()
print(json.dumps(out))
"""


def _run(code, flag):
    env = dict(os.environ, MODELGROWTH_JIT=flag)
    proc = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.parametrize("flag", ["0", "false", "OFF"])
def test_flag_selects_numpy(flag):
    info = _run(PROBE, flag)
    assert info == {"backend": "numpy", "holt": True, "smo": True, "arima": True, "nn": True}


@pytest.mark.skipif(not accel.HAVE_NUMBA, reason="numba missing")
def test_default_selects_numba():
    info = _run(PROBE, "1")
    assert info == {"backend": "numba", "holt": False, "smo": False, "arima": False, "nn": False}


def test_backends_agree_end_to_end():
    a, b = _run(FIT, "1"), _run(FIT, "0")
    for kind in a:
        assert a[kind] == pytest.approx(b[kind], rel=1e-6, abs=1e-6)
