"""Smoke test for the causal_predict_py extension.

Build first with `cargo build --release -p causal-predict-py`. The module is
loaded from target/release (or target/debug, or a causal_predict_py.so copied
next to this script).
"""

import importlib.util
import json
import math
import pathlib
import sys

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def load_module():
    candidates = [
        HERE / "causal_predict_py.so",
        ROOT / "target" / "release" / "libcausal_predict_py.so",
        ROOT / "target" / "debug" / "libcausal_predict_py.so",
    ]
    for path in candidates:
        if path.exists():
            spec = importlib.util.spec_from_file_location("causal_predict_py", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("extension not built; run `cargo build --release -p causal-predict-py`")


cp = load_module()
trapezoid = getattr(np, "trapezoid", None) or np.trapz


def check(cond, msg):
    if not cond:
        raise AssertionError(msg)
    print(f"ok  {msg}")


kernel = cp.Kernel([(1.0, 0.0, 1)], [1.0], 1.0)
check(abs(kernel.transfer(0.0) - (-1.0)) < 1e-15, "K(0) = -1 for the single pole")
check(kernel.time_kernel(0.5) == 0.0, "k vanishes for t > 0")

# K(iω) against a direct quadrature of k(t) e^{-iωt} over t <= 0
t = np.linspace(-40.0, 0.0, 400_001)
k = np.array([kernel.time_kernel(x) for x in t])
for w in (0.0, 0.7, 3.0):
    direct = trapezoid(k * np.exp(-1j * w * t), t)
    check(abs(direct - kernel.transfer(w)) < 1e-6, f"transform of k matches K(i{w})")

pair = cp.Kernel.from_json('{"omega":1.0,"poles":[[1.0,0.5,1]],"numerator":[0.0,1.0],"paired":true}')
check(len(pair.poles) == 2, "paired JSON adds the conjugate mate")
check(abs(pair.transfer(-0.3) - pair.transfer(0.3).conjugate()) < 1e-15, "conjugate symmetry of K")

a, b, omega = 1.3, 0.4, 1.0
alpha = cp.alpha_coefficient(a, b, omega)
for w in (-2.0, -0.5, 0.0, 0.9, 4.0):
    p = 1j * w
    direct = ((p - complex(a, -b)) / (p + complex(alpha, -b))).real
    check(abs(cp.phi_real(a, b, omega, w) - direct) < 1e-12, f"Re phi identity at omega = {w}")

pred = cp.Predictor(kernel, 10.0)
check(pred.target == "LOW", "positive gamma targets LOW")
check(abs(abs(pred.deviation(0.0)) - math.exp(-10.0)) < 1e-15, "|Khat(0) - K(0)| = e^-10")
check(pred.deviation_norm(0.1) < 1.0, "sup deviation on D_eps is finite")

synth = pred.synthesize(200.0, 1 << 14)
check(synth["leakage"] < 1e-3, "synthesized kernel is causal")

env = json.dumps({"shape": "raised_cosine", "lo": -0.9, "hi": 0.9})
sig, spec = cp.bandlimited_signal(env, 1.0, 400.0, 1 << 12)
errs = [cp.spectral_predict(spec, cp.Predictor(kernel, g)).err_l2 for g in (2.0, 5.0, 20.0)]
check(errs[0] > errs[1] > errs[2], f"err_l2 decreases along gamma: {errs}")

back = cp.fourier_forward(cp.fourier_inverse(spec))
check(max(abs(x - y) for x, y in zip(back.values, spec.values)) < 1e-10, "Fourier round trip")

low, high = cp.ideal_lowpass_split(spec, 1.0)
check(all(v == 0 for v in high.values), "band-limited spectrum has no high part")

mixed = cp.MixedSpectrum.from_json(
    json.dumps({"atoms": [[0.0, 2 * math.pi, 0.0]], "class": "LOW", "epsilon": 0.1, "omega": 1.0})
)
res = cp.mixed_predict(mixed, pred, -5.0, 0.5, 21)
check(abs(res.err_linf - math.exp(-10.0)) < 1e-12, "single atom error equals e^-10")
check(abs(mixed.eval(3.0) - 1.0) < 1e-15, "dc atom evaluates to 1")

config = (ROOT / "configs" / "sweep_reference.json").read_text()
report = json.loads(cp.run_experiment("sweep", config))
ratio = report["summary"]["ratio:raised-cosine"]
check(abs(ratio - 4.369782910657362e-6) <= 1e-9 * 4.369782910657362e-6, f"sweep ratio {ratio:.6e} matches golden")

for bad, label in (
    (lambda: cp.Predictor(kernel, 0.0), "gamma = 0"),
    (lambda: cp.Kernel([(1.0, 1.5, 1)], [1.0], 1.0), "pole outside the band"),
    (lambda: cp.run_experiment("nope", config), "unknown experiment"),
):
    try:
        bad()
    except ValueError as e:
        check(True, f"{label} raises {type(e).__name__}")
    else:
        raise AssertionError(f"{label} did not raise")

check(issubclass(cp.PredictError, ValueError), "PredictError is a ValueError")
print("python smoke test passed")
