#!/usr/bin/env python3
"""Regenerates the committed test fixtures.

Outputs (relative to this directory):
  models/   tiny ONNX graphs (opset 13), TOML manifests, labels, and
            expected raw outputs frozen with onnxruntime
  golden/   five 10 s analysis windows (int16 WAV @ 32 kHz) and log-mel
            dumps computed with librosa (float32 raw + JSON sidecar)
  audio/    playback fixtures

Requires: numpy, onnx, onnxruntime, librosa. Fully deterministic.
"""

import json
import os
import wave

import numpy as np
import onnx
from onnx import TensorProto, helper, numpy_helper

HERE = os.path.dirname(os.path.abspath(__file__))
MODELS = os.path.join(HERE, "models")
GOLDEN = os.path.join(HERE, "golden")
AUDIO = os.path.join(HERE, "audio")

RATE = 32000
SAMPLES = 320000
N_CLASSES = 527
OPSET = 13

BAND_HZ = [1000, 250, 500, 2000, 3000, 4000, 6000, 8000]

MEL_PRESETS = {
    "panns-64": dict(n_fft=1024, win_length=1024, hop_length=320, n_mels=64,
                     fmin=50.0, fmax=14000.0),
    "mels-256": dict(n_fft=2048, win_length=2048, hop_length=320, n_mels=256,
                     fmin=0.0, fmax=16000.0),
}
LOG_FLOOR = 1e-10


def const(name, arr, dtype=np.float32):
    return numpy_helper.from_array(np.asarray(arr, dtype=dtype), name=name)


def save_model(graph, path):
    model = helper.make_model(graph, opset_imports=[helper.make_opsetid("", OPSET)],
                              producer_name="edgetag-fixtures")
    model.ir_version = 8
    onnx.checker.check_model(model)
    onnx.save(model, path)


def band_basis(freqs, frame):
    n = np.arange(frame)
    cols = []
    for f in freqs:
        cols.append(np.cos(2 * np.pi * f * n / RATE))
        cols.append(np.sin(2 * np.pi * f * n / RATE))
    return np.stack(cols, axis=1)


def pair_sum(nbands):
    m = np.zeros((2 * nbands, nbands))
    for b in range(nbands):
        m[2 * b, b] = 1.0
        m[2 * b + 1, b] = 1.0
    return m


def tiny_embedded(path, input_samples=SAMPLES):
    """Band-energy argmax: class c < 8 is wired to the energy at BAND_HZ[c]."""
    frames = input_samples // 320
    nb = len(BAND_HZ)
    wiring = np.zeros((nb, N_CLASSES))
    for b in range(nb):
        wiring[b, b] = 1.0
    bias = np.full((N_CLASSES,), -5.0)
    nodes = [
        helper.make_node("Reshape", ["waveform", "frame_shape"], ["frames"]),
        helper.make_node("MatMul", ["frames", "basis"], ["proj"]),
        helper.make_node("Mul", ["proj", "proj"], ["proj_sq"]),
        helper.make_node("ReduceMean", ["proj_sq"], ["mean_sq"], axes=[0], keepdims=0),
        helper.make_node("MatMul", ["mean_sq", "pairs"], ["energy"]),
        helper.make_node("Add", ["energy", "one"], ["energy1"]),
        helper.make_node("Log", ["energy1"], ["log_energy"]),
        helper.make_node("MatMul", ["log_energy", "wiring"], ["wired"]),
        helper.make_node("Add", ["wired", "bias"], ["logits_flat"]),
        helper.make_node("Unsqueeze", ["logits_flat", "axes0"], ["logits"]),
    ]
    inits = [
        const("frame_shape", [frames, 320], np.int64),
        const("basis", band_basis(BAND_HZ, 320)),
        const("pairs", pair_sum(nb)),
        const("one", [1.0]),
        const("wiring", wiring),
        const("bias", bias),
        const("axes0", [0], np.int64),
    ]
    g = helper.make_graph(
        nodes, "tiny_embedded",
        [helper.make_tensor_value_info("waveform", TensorProto.FLOAT, [1, input_samples])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, [1, N_CLASSES])],
        inits)
    save_model(g, path)


def uniform_embedded(path):
    nodes = [
        helper.make_node("Mul", ["waveform", "zero"], ["zeroed"]),
        helper.make_node("ReduceSum", ["zeroed", "axes1"], ["zsum"], keepdims=1),
        helper.make_node("Add", ["zsum", "logit_row"], ["logits"]),
    ]
    inits = [
        const("zero", [0.0]),
        const("axes1", [1], np.int64),
        const("logit_row", np.full((1, N_CLASSES), 0.25)),
    ]
    g = helper.make_graph(
        nodes, "uniform_embedded",
        [helper.make_tensor_value_info("waveform", TensorProto.FLOAT, [1, SAMPLES])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, [1, N_CLASSES])],
        inits)
    save_model(g, path)


def faulty_embedded(path):
    """Finite on silence, NaN for any non-silent window (runtime failure injection)."""
    nodes = [
        helper.make_node("Abs", ["waveform"], ["mag"]),
        helper.make_node("ReduceMax", ["mag"], ["peak"], axes=[1], keepdims=1),
        helper.make_node("Neg", ["peak"], ["neg"]),
        helper.make_node("Sqrt", ["neg"], ["root"]),
        helper.make_node("Add", ["root", "logit_row"], ["logits"]),
    ]
    inits = [const("logit_row", np.zeros((1, N_CLASSES)))]
    g = helper.make_graph(
        nodes, "faulty_embedded",
        [helper.make_tensor_value_info("waveform", TensorProto.FLOAT, [1, SAMPLES])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, [1, N_CLASSES])],
        inits)
    save_model(g, path)


def mlp_embedded(path, hidden, depth, seed):
    """Frame-wise MLP; parameter count scales with hidden/depth."""
    rng = np.random.default_rng(seed)
    frames = SAMPLES // 320
    nodes = [helper.make_node("Reshape", ["waveform", "frame_shape"], ["h0"])]
    inits = [const("frame_shape", [frames, 320], np.int64)]
    width = 320
    for layer in range(depth):
        w = rng.normal(0.0, 1.0 / np.sqrt(width), size=(width, hidden))
        b = rng.normal(0.0, 0.01, size=(hidden,))
        inits += [const(f"w{layer}", w), const(f"b{layer}", b)]
        nodes += [
            helper.make_node("MatMul", [f"h{layer}", f"w{layer}"], [f"m{layer}"]),
            helper.make_node("Add", [f"m{layer}", f"b{layer}"], [f"a{layer}"]),
            helper.make_node("Relu", [f"a{layer}"], [f"h{layer + 1}"]),
        ]
        width = hidden
    wo = rng.normal(0.0, 1.0 / np.sqrt(width), size=(width, N_CLASSES))
    inits += [const("wo", wo)]
    nodes += [
        helper.make_node("ReduceMean", [f"h{depth}"], ["pooled"], axes=[0], keepdims=1),
        helper.make_node("MatMul", ["pooled", "wo"], ["logits"]),
    ]
    g = helper.make_graph(
        nodes, os.path.basename(path)[:-5],
        [helper.make_tensor_value_info("waveform", TensorProto.FLOAT, [1, SAMPLES])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, [1, N_CLASSES])],
        inits)
    save_model(g, path)


def two_stage(front_path, cls_path):
    freqs = [400 * (k + 1) for k in range(32)]
    frames = SAMPLES // 320
    nodes = [
        helper.make_node("Reshape", ["waveform", "frame_shape"], ["frames"]),
        helper.make_node("MatMul", ["frames", "basis"], ["proj"]),
        helper.make_node("Mul", ["proj", "proj"], ["proj_sq"]),
        helper.make_node("MatMul", ["proj_sq", "pairs"], ["power"]),
        helper.make_node("Add", ["power", "eps"], ["power_eps"]),
        helper.make_node("Log", ["power_eps"], ["logspec"]),
        helper.make_node("Reshape", ["logspec", "spec_shape"], ["spectrogram"]),
    ]
    inits = [
        const("frame_shape", [frames, 320], np.int64),
        const("basis", band_basis(freqs, 320)),
        const("pairs", pair_sum(len(freqs))),
        const("eps", [1e-6]),
        const("spec_shape", [1, 1, frames, len(freqs)], np.int64),
    ]
    g = helper.make_graph(
        nodes, "two_stage_frontend",
        [helper.make_tensor_value_info("waveform", TensorProto.FLOAT, [1, SAMPLES])],
        [helper.make_tensor_value_info("spectrogram", TensorProto.FLOAT, [1, 1, frames, len(freqs)])],
        inits)
    save_model(g, front_path)

    rng = np.random.default_rng(7)
    w = rng.normal(0.0, 0.05, size=(len(freqs), N_CLASSES))
    b = rng.normal(0.0, 0.1, size=(N_CLASSES,))
    nodes = [
        helper.make_node("ReduceMean", ["spectrogram"], ["pooled"], axes=[2], keepdims=0),
        helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
        helper.make_node("Gemm", ["flat", "w", "b"], ["logits"]),
        helper.make_node("Sigmoid", ["logits"], ["clipwise"]),
    ]
    g = helper.make_graph(
        nodes, "two_stage_classifier",
        [helper.make_tensor_value_info("spectrogram", TensorProto.FLOAT, [1, 1, frames, len(freqs)])],
        [helper.make_tensor_value_info("clipwise", TensorProto.FLOAT, [1, N_CLASSES])],
        [const("w", w), const("b", b)])
    save_model(g, cls_path)


def external_classifier(path, n_mels=64, n_frames=1001):
    rng = np.random.default_rng(11)
    w = rng.normal(0.0, 0.02, size=(n_mels, N_CLASSES))
    b = rng.normal(0.0, 0.1, size=(1, N_CLASSES))
    nodes = [
        helper.make_node("ReduceMean", ["logmel"], ["pooled"], axes=[3], keepdims=0),
        helper.make_node("Reshape", ["pooled", "flat_shape"], ["flat"]),
        helper.make_node("Div", ["flat", "scale"], ["scaled"]),
        helper.make_node("MatMul", ["scaled", "w"], ["proj"]),
        helper.make_node("Add", ["proj", "b"], ["logits"]),
    ]
    g = helper.make_graph(
        nodes, "external_classifier",
        [helper.make_tensor_value_info("logmel", TensorProto.FLOAT, [1, 1, n_mels, n_frames])],
        [helper.make_tensor_value_info("logits", TensorProto.FLOAT, [1, N_CLASSES])],
        [const("flat_shape", [1, n_mels], np.int64), const("scale", [10.0]),
         const("w", w), const("b", b)])
    save_model(g, path)


def cnn_external(path, n_mels=64, n_frames=1001):
    """Small CNN over a (time, mel) log-mel image; ends in Softmax."""
    rng = np.random.default_rng(23)
    w1 = rng.normal(0.0, 0.3, size=(4, 1, 3, 3))
    b1 = rng.normal(0.0, 0.1, size=(4,))
    gamma = rng.uniform(0.5, 1.5, size=(4,))
    beta = rng.normal(0.0, 0.1, size=(4,))
    mean = rng.normal(-40.0, 5.0, size=(4,))
    var = rng.uniform(50.0, 150.0, size=(4,))
    w2 = rng.normal(0.0, 0.3, size=(8, 4, 3, 3))
    b2 = rng.normal(0.0, 0.1, size=(8,))
    wo = rng.normal(0.0, 0.2, size=(16, N_CLASSES))
    bo = rng.normal(0.0, 0.1, size=(N_CLASSES,))
    nodes = [
        helper.make_node("Transpose", ["logmel"], ["time_mel"], perm=[0, 1, 3, 2]),
        helper.make_node("Conv", ["time_mel", "w1", "b1"], ["c1"], kernel_shape=[3, 3], pads=[1, 1, 1, 1]),
        helper.make_node("BatchNormalization", ["c1", "gamma", "beta", "mean", "var"], ["bn1"], epsilon=1e-5),
        helper.make_node("Relu", ["bn1"], ["r1"]),
        helper.make_node("MaxPool", ["r1"], ["p1"], kernel_shape=[2, 2], strides=[2, 2]),
        helper.make_node("Conv", ["p1", "w2", "b2"], ["c2"], kernel_shape=[3, 3], pads=[1, 1, 1, 1],
                         strides=[2, 1]),
        helper.make_node("Relu", ["c2"], ["r2"]),
        helper.make_node("AveragePool", ["r2"], ["p2"], kernel_shape=[2, 2], strides=[2, 2]),
        helper.make_node("GlobalAveragePool", ["p2"], ["gap"]),
        helper.make_node("ReduceMax", ["p2"], ["gmax"], axes=[2, 3], keepdims=1),
        helper.make_node("Concat", ["gap", "gmax"], ["pooled"], axis=1),
        helper.make_node("Flatten", ["pooled"], ["flat"], axis=1),
        helper.make_node("Gemm", ["flat", "wo", "bo"], ["logits"]),
        helper.make_node("Softmax", ["logits"], ["probs"], axis=1),
    ]
    inits = [const("w1", w1), const("b1", b1), const("gamma", gamma), const("beta", beta),
             const("mean", mean), const("var", var), const("w2", w2), const("b2", b2),
             const("wo", wo), const("bo", bo)]
    g = helper.make_graph(
        nodes, "cnn_external",
        [helper.make_tensor_value_info("logmel", TensorProto.FLOAT, [1, 1, n_mels, n_frames])],
        [helper.make_tensor_value_info("probs", TensorProto.FLOAT, [1, N_CLASSES])],
        inits)
    save_model(g, path)


def write_labels(path):
    names = [f"Tone {hz} Hz" for hz in BAND_HZ]
    names += [f"Class {i:03d}" for i in range(len(names), N_CLASSES)]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(names) + "\n")


def write_manifest(path, **fields):
    lines = []
    for key, value in fields.items():
        if isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        else:
            lines.append(f"{key} = {value}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")


def write_wav16(path, samples, rate):
    pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(path, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(rate)
        w.writeframes(pcm.tobytes())
    return pcm.astype(np.float32) / 32768.0


def golden_windows():
    t = np.arange(SAMPLES) / RATE
    rng = np.random.default_rng(42)
    out = {}
    out["silence"] = np.zeros(SAMPLES)
    out["sine_1k"] = np.sin(2 * np.pi * 1000.0 * t)
    out["white_noise"] = np.clip(rng.normal(0.0, 0.25, SAMPLES), -1.0, 1.0)
    # linear chirp 100 Hz -> 12 kHz
    f0, f1 = 100.0, 12000.0
    out["chirp"] = 0.8 * np.sin(2 * np.pi * (f0 * t + 0.5 * (f1 - f0) / 10.0 * t * t))
    # voiced speech-like: 120 Hz glottal pulse train through three formant resonators,
    # with syllable-rate amplitude envelope
    from scipy.signal import lfilter
    pulses = np.zeros(SAMPLES)
    period = 1.0 / 120.0
    k = 0.0
    while k < 10.0:
        pulses[int(k * RATE)] = 1.0
        k += period * (1.0 + 0.05 * np.sin(2 * np.pi * 0.7 * k))
    speech = np.zeros(SAMPLES)
    for fc, bw, gain in [(700, 130, 1.0), (1220, 70, 0.5), (2600, 160, 0.25)]:
        r = np.exp(-np.pi * bw / RATE)
        theta = 2 * np.pi * fc / RATE
        speech += gain * lfilter([1.0 - r], [1.0, -2 * r * np.cos(theta), r * r], pulses)
    env = 0.5 * (1.0 - np.cos(2 * np.pi * 4.0 * t)) * (t % 2.5 < 2.0)
    speech = speech * env
    speech = 0.7 * speech / np.max(np.abs(speech))
    out["speech"] = speech + 0.003 * rng.normal(0.0, 1.0, SAMPLES)
    return out


def log_mel_oracle(x, preset):
    import librosa
    p = MEL_PRESETS[preset]
    s = librosa.feature.melspectrogram(
        y=x.astype(np.float64), sr=RATE, n_fft=p["n_fft"], hop_length=p["hop_length"],
        win_length=p["win_length"], window="hann", center=True, pad_mode="reflect",
        power=2.0, n_mels=p["n_mels"], fmin=p["fmin"], fmax=p["fmax"],
        htk=False, norm="slaney")
    return 10.0 * np.log10(np.maximum(s, LOG_FLOOR))


def main():
    os.makedirs(MODELS, exist_ok=True)
    os.makedirs(GOLDEN, exist_ok=True)
    os.makedirs(AUDIO, exist_ok=True)

    write_labels(os.path.join(MODELS, "labels_527.txt"))
    tiny_embedded(os.path.join(MODELS, "tiny_embedded.onnx"))
    tiny_embedded(os.path.join(MODELS, "tiny_embedded_160k.onnx"), input_samples=160000)
    uniform_embedded(os.path.join(MODELS, "uniform_embedded.onnx"))
    faulty_embedded(os.path.join(MODELS, "faulty_embedded.onnx"))
    mlp_embedded(os.path.join(MODELS, "small_embedded.onnx"), hidden=16, depth=1, seed=1)
    mlp_embedded(os.path.join(MODELS, "large_embedded.onnx"), hidden=160, depth=2, seed=2)
    two_stage(os.path.join(MODELS, "two_stage_frontend.onnx"),
              os.path.join(MODELS, "two_stage_classifier.onnx"))
    external_classifier(os.path.join(MODELS, "external_classifier.onnx"))
    cnn_external(os.path.join(MODELS, "cnn_external.onnx"))

    common = dict(labels_path="labels_527.txt")
    write_manifest(os.path.join(MODELS, "tiny-embedded.toml"), model_id="tiny-embedded",
                   pipeline_kind="embedded-frontend", primary_model_path="tiny_embedded.onnx", **common)
    write_manifest(os.path.join(MODELS, "uniform.toml"), model_id="uniform",
                   pipeline_kind="embedded-frontend", primary_model_path="uniform_embedded.onnx", **common)
    write_manifest(os.path.join(MODELS, "faulty.toml"), model_id="faulty",
                   pipeline_kind="embedded-frontend", primary_model_path="faulty_embedded.onnx", **common)
    write_manifest(os.path.join(MODELS, "small.toml"), model_id="small",
                   pipeline_kind="embedded-frontend", primary_model_path="small_embedded.onnx", **common)
    write_manifest(os.path.join(MODELS, "large.toml"), model_id="large",
                   pipeline_kind="embedded-frontend", primary_model_path="large_embedded.onnx", **common)
    write_manifest(os.path.join(MODELS, "two-stage.toml"), model_id="two-stage",
                   pipeline_kind="two-stage", primary_model_path="two_stage_classifier.onnx",
                   frontend_model_path="two_stage_frontend.onnx", **common)
    write_manifest(os.path.join(MODELS, "external-spectrogram.toml"), model_id="external-spectrogram",
                   pipeline_kind="external-spectrogram", primary_model_path="external_classifier.onnx",
                   mel_preset="panns-64", **common)
    write_manifest(os.path.join(MODELS, "cnn-external.toml"), model_id="cnn-external",
                   pipeline_kind="external-spectrogram", primary_model_path="cnn_external.onnx",
                   mel_preset="panns-64", **common)
    write_manifest(os.path.join(MODELS, "mismatch.toml"), model_id="mismatch",
                   pipeline_kind="embedded-frontend", primary_model_path="tiny_embedded_160k.onnx",
                   input_samples=320000, **common)
    write_manifest(os.path.join(MODELS, "broken.toml"), model_id="broken",
                   pipeline_kind="two-stage", primary_model_path="two_stage_classifier.onnx", **common)

    windows = golden_windows()
    quantized = {}
    for name, x in windows.items():
        quantized[name] = write_wav16(os.path.join(GOLDEN, f"{name}.wav"), x, RATE)

    index = []
    for name, x in quantized.items():
        lm = log_mel_oracle(x, "panns-64").astype("<f4")
        lm.tofile(os.path.join(GOLDEN, f"{name}.panns-64.f32"))
        sidecar = dict(shape=list(lm.shape), dtype="float32", layout="row-major (n_mels, n_frames)",
                       input=f"{name}.wav", preset="panns-64", sample_rate_hz=RATE,
                       mel_config=dict(MEL_PRESETS["panns-64"], power=2.0, log_floor=LOG_FLOOR,
                                       center_padding=True, window="hann", mel_scale="slaney",
                                       norm="slaney"),
                       oracle="librosa " + __import__("librosa").__version__)
        with open(os.path.join(GOLDEN, f"{name}.panns-64.json"), "w") as f:
            json.dump(sidecar, f, indent=2, sort_keys=True)
            f.write("\n")
        index.append(name)
    with open(os.path.join(GOLDEN, "index.json"), "w") as f:
        json.dump(dict(preset="panns-64", windows=index), f, indent=2)
        f.write("\n")

    # frozen onnxruntime outputs used to check the in-tree interpreter
    import onnxruntime as ort
    so = ort.SessionOptions()
    so.intra_op_num_threads = 1
    expected = {}

    def run(model, feeds):
        sess = ort.InferenceSession(os.path.join(MODELS, model), so, providers=["CPUExecutionProvider"])
        return sess.run(None, feeds)[0]

    for name in ["sine_1k", "white_noise"]:
        wav = quantized[name].astype(np.float32).reshape(1, SAMPLES)
        entry = {}
        for model in ["tiny_embedded.onnx", "uniform_embedded.onnx", "small_embedded.onnx",
                      "large_embedded.onnx", "two_stage_frontend.onnx"]:
            out = run(model, {"waveform": wav})
            if model == "two_stage_frontend.onnx":
                spec = out
                out = run("two_stage_classifier.onnx", {"spectrogram": spec})
                entry["two_stage_spectrogram_head"] = spec.reshape(-1)[:64].tolist()
                model = "two_stage_classifier.onnx"
            entry[model] = out.reshape(-1).tolist()
        lm = np.fromfile(os.path.join(GOLDEN, f"{name}.panns-64.f32"), dtype="<f4").reshape(1, 1, 64, 1001)
        entry["external_classifier.onnx"] = run("external_classifier.onnx", {"logmel": lm}).reshape(-1).tolist()
        entry["cnn_external.onnx"] = run("cnn_external.onnx", {"logmel": lm}).reshape(-1).tolist()
        expected[name] = entry
    with open(os.path.join(MODELS, "expected_outputs.json"), "w") as f:
        json.dump(expected, f)
        f.write("\n")

    # 10 s playback fixture at a device rate
    t = np.arange(441000) / 44100.0
    write_wav16(os.path.join(AUDIO, "tone_1k_44k1_10s.wav"), 0.5 * np.sin(2 * np.pi * 1000.0 * t), 44100)


if __name__ == "__main__":
    main()
