"""Dense networks with hand-rolled gradients, Adam, and target tracking.

All agents share one architecture: two ReLU hidden layers and a linear output
head, float64 throughout.  Gradients are computed analytically by `backward`
(layer-local chain rule), which makes them directly checkable against central
finite differences.  Weights and biases initialize from U(-1/sqrt(fan_in),
+1/sqrt(fan_in)) per layer.

Checkpoint format (one file per network): an ASCII header line
``mlp <size0> <size1> ... <sizeK>\\n`` followed by raw little-endian float64
bytes, per layer the (in x out) weight matrix row-major then the bias vector.
"""

import numpy as np


class Mlp:
    """Feed-forward net: sizes [in, hidden..., out], ReLU inside, linear out."""

    def __init__(self, sizes: list[int], rng: np.random.Generator | None = None):
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ValueError(f"need at least [in, out] positive sizes, got {sizes}")
        self.sizes = list(int(s) for s in sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            if rng is None:
                w = np.zeros((fan_in, fan_out))
                b = np.zeros(fan_out)
            else:
                w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
                b = rng.uniform(-bound, bound, size=fan_out)
            self.weights.append(w)
            self.biases.append(b)

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def parameters(self) -> list[np.ndarray]:
        """Interleaved [W0, b0, W1, b1, ...]; arrays are the live storage."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Map a (batch, in_dim) array to (batch, out_dim); params untouched."""
        h = np.asarray(x, dtype=np.float64)
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h

    def forward_cache(self, x: np.ndarray):
        """Forward pass keeping each layer's input for backward()."""
        h = np.asarray(x, dtype=np.float64)
        inputs = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h, inputs

    def backward(self, inputs: list[np.ndarray], grad_out: np.ndarray,
                 need_input_grad: bool = False):
        """Gradients of sum(forward(x) * grad_out) w.r.t. params (and input).

        Returns (grads, grad_in) where grads interleaves [dW0, db0, dW1, ...]
        in parameters() order and grad_in is None unless requested.
        """
        grads: list[np.ndarray | None] = [None] * (2 * len(self.weights))
        g = np.asarray(grad_out, dtype=np.float64)
        grad_in = None
        for l in range(len(self.weights) - 1, -1, -1):
            x_l = inputs[l]
            grads[2 * l] = x_l.T @ g
            grads[2 * l + 1] = g.sum(axis=0)
            if l > 0:
                g = (g @ self.weights[l].T) * (x_l > 0.0)
            elif need_input_grad:
                grad_in = g @ self.weights[0].T
        return grads, grad_in

    def input_grad(self, inputs: list[np.ndarray], grad_out: np.ndarray) -> np.ndarray:
        """d sum(forward(x) * grad_out) / dx without touching param grads."""
        g = np.asarray(grad_out, dtype=np.float64)
        for l in range(len(self.weights) - 1, 0, -1):
            g = (g @ self.weights[l].T) * (inputs[l] > 0.0)
        return g @ self.weights[0].T

    def copy(self) -> "Mlp":
        clone = Mlp(self.sizes, rng=None)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.parameters()])

    def set_flat(self, flat: np.ndarray) -> None:
        offset = 0
        for p in self.parameters():
            p[...] = flat[offset:offset + p.size].reshape(p.shape)
            offset += p.size
        if offset != flat.size:
            raise ValueError(f"flat vector has {flat.size} entries, net needs {offset}")

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(("mlp " + " ".join(str(s) for s in self.sizes) + "\n").encode("ascii"))
            for w, b in zip(self.weights, self.biases):
                fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
                fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "Mlp":
        with open(path, "rb") as fh:
            header = fh.readline().decode("ascii").split()
            if not header or header[0] != "mlp":
                raise ValueError(f"{path}: not a network checkpoint")
            sizes = [int(s) for s in header[1:]]
            net = cls(sizes, rng=None)
            for l, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
                w = np.frombuffer(fh.read(8 * fan_in * fan_out), dtype="<f8")
                net.weights[l] = w.reshape(fan_in, fan_out).astype(np.float64)
                net.biases[l] = np.frombuffer(fh.read(8 * fan_out), dtype="<f8").astype(np.float64)
            trailing = fh.read(1)
            if trailing:
                raise ValueError(f"{path}: trailing bytes after parameters")
        return net


def policy_net_sizes(in_dim: int, out_dim: int, hidden: int) -> list[int]:
    return [in_dim, hidden, hidden, out_dim]


class Adam:
    """Standard Adam with bias correction; updates the net's arrays in place."""

    def __init__(self, net: Mlp, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = net.parameters()
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]

    def step(self, grads: list[np.ndarray]) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for p, m, v, g in zip(self.params, self.m, self.v, grads):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


def polyak_update(target: Mlp, online: Mlp, rate: float) -> None:
    """target <- (1 - rate) * target + rate * online, in place."""
    for t, o in zip(target.parameters(), online.parameters()):
        t *= (1.0 - rate)
        t += rate * o
