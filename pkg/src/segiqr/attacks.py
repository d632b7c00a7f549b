"""Gradient attacks against the classifier: FGSM, PGD, and DeepFool.

All three operate on canonical [0,1] images; epsilon is an L-infinity
budget in that space. FGSM and PGD never leave the epsilon ball around the
original image, DeepFool searches for a minimal perturbation instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from segiqr.errors import ConfigError
from segiqr.nn.network import Network


@dataclass
class AttackParams:
    method: str = "fgsm"  # fgsm | pgd | deepfool
    epsilon: float = 0.1
    steps: int = 10
    step_size: float | None = None  # pgd default: epsilon / 4
    random_start: bool = True
    overshoot: float = 0.02
    max_iter: int = 50
    seed: int = 0

    def validate(self):
        if self.method not in ("fgsm", "pgd", "deepfool"):
            raise ConfigError(f"unknown attack method {self.method!r}")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.step_size is not None and self.step_size <= 0:
            raise ConfigError("step_size must be > 0")
        return self


@dataclass
class AttackResult:
    image: np.ndarray                # adversarial image, CxHxW in [0,1]
    original_class: int
    adversarial_class: int
    true_label: int
    success: bool                    # adversarial prediction != true label
    linf_distance: float
    iterations: int = 0


@dataclass
class BatchSummary:
    total: int
    still_correct: int
    accuracy: float
    success_rate: float
    epsilon: float
    method: str


def _results(net: Network, originals, adversarials, labels, orig_preds, iterations=None) -> list[AttackResult]:
    adv_preds = net.predict(adversarials)
    out = []
    for i in range(len(originals)):
        linf = float(np.abs(adversarials[i] - originals[i]).max())
        out.append(AttackResult(
            image=adversarials[i],
            original_class=int(orig_preds[i]),
            adversarial_class=int(adv_preds[i]),
            true_label=int(labels[i]),
            success=int(adv_preds[i]) != int(labels[i]),
            linf_distance=linf,
            iterations=0 if iterations is None else int(iterations[i]),
        ))
    return out


def fgsm(net: Network, images: np.ndarray, labels: np.ndarray, epsilon: float) -> list[AttackResult]:
    """Single step of sign-of-gradient ascent on the cross-entropy loss."""
    images = np.asarray(images, dtype=np.float32)
    orig_preds = net.predict(images)
    grad = net.input_gradient(images, labels)
    adv = np.clip(images + np.float32(epsilon) * np.sign(grad), 0.0, 1.0)
    return _results(net, images, adv, labels, orig_preds)


def pgd(net: Network, images: np.ndarray, labels: np.ndarray, epsilon: float,
        step_size: float | None = None, steps: int = 10,
        random_start: bool = True, seed: int = 0) -> list[AttackResult]:
    """Iterated FGSM, each iterate projected onto the epsilon ball and [0,1].

    With steps=1, step_size=epsilon and no random start this reproduces
    fgsm() bit for bit.
    """
    images = np.asarray(images, dtype=np.float32)
    eps = np.float32(epsilon)
    alpha = np.float32(epsilon / 4 if step_size is None else step_size)
    orig_preds = net.predict(images)
    lo = np.clip(images - eps, 0.0, 1.0)
    hi = np.clip(images + eps, 0.0, 1.0)
    x = images
    if random_start:
        rng = np.random.default_rng(seed)
        noise = rng.uniform(-epsilon, epsilon, size=images.shape).astype(np.float32)
        x = np.clip(images + noise, lo, hi)
    for _ in range(steps):
        grad = net.input_gradient(x, labels)
        x = x + alpha * np.sign(grad)
        x = np.clip(np.clip(x, images - eps, images + eps), 0.0, 1.0)
    x = np.clip(x, lo, hi)
    return _results(net, images, x, labels, orig_preds)


def deepfool(net: Network, image: np.ndarray, label: int, max_iter: int = 50,
             overshoot: float = 0.02) -> AttackResult:
    """Iterative linearization toward the nearest class boundary.

    Each round picks the competing class minimizing |f_l - f_c| / ||w_l||
    with w_l the logit gradient difference, and steps just past the
    linearized boundary. Non-convergence is reported, not raised.
    """
    image = np.asarray(image, dtype=np.float32)
    label = int(label)
    if not 0 <= label < net.class_count:
        raise ConfigError(f"label {label} out of range [0, {net.class_count})")
    orig_pred = int(net.predict(image[None])[0])
    if orig_pred != label:
        return AttackResult(image=image.copy(), original_class=orig_pred,
                            adversarial_class=orig_pred, true_label=label,
                            success=True, linf_distance=0.0, iterations=0)

    x = image.copy()
    total = np.zeros_like(image)
    iterations = 0
    for _ in range(max_iter):
        logits, grads = net.class_logit_gradients(x)
        current = int(logits.argmax())
        if current != label:
            break
        iterations += 1
        best_step = None
        best_dist = np.inf
        for cls in range(net.class_count):
            if cls == label:
                continue
            w = grads[cls] - grads[label]
            f_diff = float(logits[cls] - logits[label])
            norm2 = float((w * w).sum())
            if norm2 < 1e-20:
                continue
            dist = abs(f_diff) / np.sqrt(norm2)
            if dist < best_dist:
                best_dist = dist
                best_step = (abs(f_diff) + 1e-6) / norm2 * w
        if best_step is None:
            break
        total += best_step
        x = np.clip(image + np.float32(1.0 + overshoot) * total, 0.0, 1.0)

    adv_pred = int(net.predict(x[None])[0])
    return AttackResult(image=x, original_class=orig_pred, adversarial_class=adv_pred,
                        true_label=label, success=adv_pred != label,
                        linf_distance=float(np.abs(x - image).max()),
                        iterations=iterations)


def attack_batch(net: Network, images: np.ndarray, labels: np.ndarray,
                 params: AttackParams) -> tuple[list[AttackResult], BatchSummary]:
    """Attacks every image and summarizes accuracy-after-attack, the fraction
    of the batch the classifier still gets right."""
    params.validate()
    labels = np.asarray(labels, dtype=np.int64)
    if params.method == "fgsm":
        results = fgsm(net, images, labels, params.epsilon)
    elif params.method == "pgd":
        results = pgd(net, images, labels, params.epsilon, params.step_size,
                      params.steps, params.random_start, params.seed)
    else:
        results = [deepfool(net, images[i], int(labels[i]), params.max_iter, params.overshoot)
                   for i in range(len(images))]
    still = sum(1 for r in results if r.adversarial_class == r.true_label)
    summary = BatchSummary(
        total=len(results),
        still_correct=still,
        accuracy=still / len(results) if results else 0.0,
        success_rate=sum(r.success for r in results) / len(results) if results else 0.0,
        epsilon=params.epsilon,
        method=params.method,
    )
    return results, summary
