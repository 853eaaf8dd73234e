# Operaciones diferenciables sobre Tensor
# Cada operación calcula su salida con numpy y registra su regla de gradiente

import itertools
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from utils.errors import ShapeError
from .tensor import Tensor

Number = Union[int, float]

GELU_COEF = 0.044715
SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))


def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    """Convierte escalares o arrays en Tensor constante del mismo dtype que `like`"""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(value, dtype=dtype)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Reduce un gradiente difundido (broadcast) a la forma original"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shapes(op: str, a: Tensor, b: Tensor):
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: formas incompatibles {a.shape} y {b.shape}") from None


# Elementales

def add(a, b) -> Tensor:
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shapes("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor.from_op(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shapes("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor.from_op(a.data - b.data, (a, b), backward, "sub")


def mul(a, b) -> Tensor:
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shapes("mul", a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor.from_op(a.data * b.data, (a, b), backward, "mul")


def div(a, b) -> Tensor:
    a, b = as_tensor(a, b if isinstance(b, Tensor) else None), as_tensor(b, a if isinstance(a, Tensor) else None)
    _broadcast_shapes("div", a, b)

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return Tensor.from_op(a.data / b.data, (a, b), backward, "div")


def neg(a: Tensor) -> Tensor:
    return Tensor.from_op(-a.data, (a,), lambda g: (-g,), "neg")


def pow_scalar(a: Tensor, exponent: Number) -> Tensor:
    def backward(g):
        return (g * exponent * np.power(a.data, exponent - 1),)

    return Tensor.from_op(np.power(a.data, exponent), (a,), backward, "pow")


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g * out,), "exp")


def log(a: Tensor) -> Tensor:
    return Tensor.from_op(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return Tensor.from_op(out, (a,), lambda g: (g * 0.5 / out,), "sqrt")


def clamp_min(a: Tensor, minimum: Number) -> Tensor:
    """max(a, minimum); el gradiente se anula donde se aplica el recorte"""
    keep = a.data > minimum
    out = np.where(keep, a.data, np.asarray(minimum, dtype=a.dtype))
    return Tensor.from_op(out, (a,), lambda g: (g * keep,), "clamp_min")


def relu(a: Tensor) -> Tensor:
    positive = a.data > 0
    out = np.where(positive, a.data, np.zeros((), dtype=a.dtype))
    return Tensor.from_op(out, (a,), lambda g: (g * positive,), "relu")


def sigmoid(a: Tensor) -> Tensor:
    out = 1.0 / (1.0 + np.exp(-a.data))
    return Tensor.from_op(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def gelu(a: Tensor) -> Tensor:
    """GELU en su forma tanh"""
    x = a.data
    inner = SQRT_2_OVER_PI * (x + GELU_COEF * x ** 3)
    t = np.tanh(inner)
    out = 0.5 * x * (1.0 + t)

    def backward(g):
        d_inner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEF * x * x)
        return (g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner),)

    return Tensor.from_op(out, (a,), backward, "gelu")


# Álgebra lineal

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: formas incompatibles {a.shape} y {b.shape}")
    try:
        out = np.matmul(a.data, b.data)
    except ValueError:
        raise ShapeError(f"matmul: formas incompatibles {a.shape} y {b.shape}") from None

    def backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor.from_op(out, (a, b), backward, "matmul")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    Proyección afín sobre el último eje
    Args:
        x: Tensor [..., in]
        weight: Tensor [in, out]
        bias: Tensor [out] (opcional)
    Returns:
        Tensor [..., out]
    """
    if weight.ndim != 2 or x.shape[-1] != weight.shape[0]:
        raise ShapeError(f"linear: formas incompatibles {x.shape} y {weight.shape}")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"linear: sesgo {bias.shape} no coincide con pesos {weight.shape}")
    lead = x.shape[:-1]
    x2 = x.data.reshape(-1, weight.shape[0])
    out = x2 @ weight.data
    if bias is not None:
        out = out + bias.data

    def backward(g):
        g2 = g.reshape(-1, weight.shape[1])
        gx = (g2 @ weight.data.T).reshape(x.shape)
        gw = x2.T @ g2
        gb = g2.sum(axis=0) if bias is not None else None
        return (gx, gw, gb) if bias is not None else (gx, gw)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out.reshape(lead + (weight.shape[1],)), parents, backward, "linear")


# Forma

def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(int(s) for s in shape)
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: no se puede pasar de {a.shape} a {shape}") from None
    return Tensor.from_op(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def permute(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(int(ax) for ax in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError(f"permute: ejes {axes} inválidos para forma {a.shape}")
    inverse = tuple(np.argsort(axes))
    out = np.ascontiguousarray(np.transpose(a.data, axes))
    return Tensor.from_op(out, (a,), lambda g: (np.transpose(g, inverse),), "permute")


def pad(a: Tensor, pad_width: Sequence[Tuple[int, int]]) -> Tensor:
    """Relleno con ceros; pad_width como en numpy, un par por eje"""
    pad_width = [tuple(p) for p in pad_width]
    if len(pad_width) != a.ndim:
        raise ShapeError(f"pad: {len(pad_width)} pares para forma {a.shape}")
    out = np.pad(a.data, pad_width)
    index = tuple(slice(lo, lo + extent) for (lo, _), extent in zip(pad_width, a.shape))
    return Tensor.from_op(out, (a,), lambda g: (g[index],), "pad")


def slice_(a: Tensor, index) -> Tensor:
    """Indexado básico (enteros y slices)"""
    out = np.array(a.data[index], copy=True)

    def backward(g):
        grad = np.zeros_like(a.data)
        grad[index] += g
        return (grad,)

    return Tensor.from_op(out, (a,), backward, "slice")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("concat: lista vacía")
    ndim = tensors[0].ndim
    axis = axis % ndim
    for t in tensors[1:]:
        if t.ndim != ndim or any(
            t.shape[d] != tensors[0].shape[d] for d in range(ndim) if d != axis
        ):
            raise ShapeError(f"concat: formas incompatibles {tensors[0].shape} y {t.shape} en eje {axis}")
    sizes = [t.shape[axis] for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)

    def backward(g):
        return tuple(np.split(g, np.cumsum(sizes)[:-1], axis=axis))

    return Tensor.from_op(out, tuple(tensors), backward, "concat")


def stack(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ShapeError("stack: lista vacía")
    ndim = tensors[0].ndim + 1
    axis = axis % ndim
    expanded = [reshape(t, t.shape[:axis] + (1,) + t.shape[axis:]) for t in tensors]
    return concat(expanded, axis=axis)


def roll(a: Tensor, shifts: Sequence[int], axes: Sequence[int]) -> Tensor:
    """Desplazamiento circular; el inverso es roll con -shifts"""
    shifts = tuple(int(s) for s in shifts)
    axes = tuple(int(ax) for ax in axes)
    out = np.roll(a.data, shifts, axes)
    back = tuple(-s for s in shifts)
    return Tensor.from_op(out, (a,), lambda g: (np.roll(g, back, axes),), "roll")


def take(a: Tensor, indices: np.ndarray, axis: int = 0) -> Tensor:
    """Recoge filas por índice entero a lo largo de `axis`"""
    indices = np.asarray(indices, dtype=np.int64)
    axis = axis % a.ndim
    if indices.size and (indices.min() < 0 or indices.max() >= a.shape[axis]):
        raise ShapeError(f"take: índices fuera de rango para eje {axis} de forma {a.shape}")
    out = np.take(a.data, indices, axis=axis)

    def backward(g):
        grad = np.zeros_like(a.data)
        moved = np.moveaxis(grad, axis, 0)
        g_moved = np.moveaxis(g, axis, 0).reshape((indices.size,) + moved.shape[1:])
        np.add.at(moved, indices.reshape(-1), g_moved)
        return (grad,)

    return Tensor.from_op(out, (a,), backward, "take")


# Reducciones

def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(ax % ndim for ax in axis))


def sequential_sum(data: np.ndarray, axes: Tuple[int, ...], keepdims: bool = False) -> np.ndarray:
    """
    Suma en orden secuencial de izquierda a derecha sobre los ejes dados
    (cumsum acumula elemento a elemento; np.sum usa suma por pares)
    """
    kept = [ax for ax in range(data.ndim) if ax not in axes]
    moved = np.transpose(data, kept + list(axes))
    length = int(np.prod([data.shape[ax] for ax in axes], dtype=np.int64))
    flat = moved.reshape([data.shape[ax] for ax in kept] + [length])
    if length == 0:
        out = np.zeros(flat.shape[:-1], dtype=data.dtype)
    else:
        out = np.cumsum(flat, axis=-1)[..., -1]
    if keepdims:
        out = np.expand_dims(out, axes)
    return np.asarray(out)


def sum_(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    out = sequential_sum(a.data, axes, keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor.from_op(np.asarray(out), (a,), backward, "sum")


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    out = sequential_sum(a.data, axes, keepdims) / count

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g / count, a.shape).copy(),)

    return Tensor.from_op(np.asarray(out), (a,), backward, "mean")


def max_(a: Tensor, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    """Máximo; el gradiente va a la primera posición máxima"""
    if axis is None:
        flat = a.data.reshape(-1)
        idx = int(np.argmax(flat))
        out = np.asarray(flat[idx]).reshape((1,) * a.ndim if keepdims else ())

        def backward_all(g):
            grad = np.zeros(flat.shape, dtype=a.dtype)
            grad[idx] = np.asarray(g).reshape(-1)[0]
            return (grad.reshape(a.shape),)

        return Tensor.from_op(out, (a,), backward_all, "max")

    axis = axis % a.ndim
    idx = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    out = np.take_along_axis(a.data, idx, axis=axis)
    if not keepdims:
        out = np.squeeze(out, axis=axis)

    def backward(g):
        grad = np.zeros_like(a.data)
        g = g if keepdims else np.expand_dims(g, axis)
        np.put_along_axis(grad, idx, g, axis=axis)
        return (grad,)

    return Tensor.from_op(out, (a,), backward, "max")


# Activaciones normalizadas

def softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return Tensor.from_op(out, (a,), backward, "softmax")


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    logsum = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    out = shifted - logsum
    probs = np.exp(out)

    def backward(g):
        return (g - probs * g.sum(axis=axis, keepdims=True),)

    return Tensor.from_op(out, (a,), backward, "log_softmax")


def layer_norm(x: Tensor, weight: Optional[Tensor] = None, bias: Optional[Tensor] = None,
               eps: float = 1e-5) -> Tensor:
    """Normalización sobre el último eje (canales)"""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = centered * rstd
    out = xhat
    if weight is not None:
        out = out * weight.data
    if bias is not None:
        out = out + bias.data
    lead_axes = tuple(range(x.ndim - 1))

    def backward(g):
        gxhat = g * weight.data if weight is not None else g
        gx = rstd * (gxhat - gxhat.mean(axis=-1, keepdims=True)
                     - xhat * (gxhat * xhat).mean(axis=-1, keepdims=True))
        grads = [gx]
        if weight is not None:
            grads.append((g * xhat).sum(axis=lead_axes))
        if bias is not None:
            grads.append(g.sum(axis=lead_axes))
        return tuple(grads)

    parents = [x] + [t for t in (weight, bias) if t is not None]
    return Tensor.from_op(out, tuple(parents), backward, "layer_norm")


def group_norm(x: Tensor, groups: int, weight: Optional[Tensor] = None,
               bias: Optional[Tensor] = None, eps: float = 1e-5) -> Tensor:
    """
    Group Normalization con canales al final
    Args:
        x: Tensor [..., C]; estadísticas sobre todas las posiciones y los canales del grupo
        groups: Número de grupos (divide a C)
    Returns:
        Tensor con la misma forma
    """
    channels = x.shape[-1]
    if groups <= 0 or channels % groups != 0:
        raise ShapeError(f"group_norm: {groups} grupos no dividen {channels} canales (forma {x.shape})")
    per_group = channels // groups
    grouped = x.data.reshape(-1, groups, per_group)
    mu = grouped.mean(axis=(0, 2), keepdims=True)
    centered = grouped - mu
    var = (centered * centered).mean(axis=(0, 2), keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = centered * rstd
    out = xhat.reshape(x.shape)
    if weight is not None:
        out = out * weight.data
    if bias is not None:
        out = out + bias.data
    lead_axes = tuple(range(x.ndim - 1))

    def backward(g):
        gxhat = g * weight.data if weight is not None else g
        gxhat = gxhat.reshape(-1, groups, per_group)
        gx = rstd * (gxhat - gxhat.mean(axis=(0, 2), keepdims=True)
                     - xhat * (gxhat * xhat).mean(axis=(0, 2), keepdims=True))
        grads = [gx.reshape(x.shape)]
        if weight is not None:
            grads.append((g * xhat.reshape(x.shape)).sum(axis=lead_axes))
        if bias is not None:
            grads.append(g.sum(axis=lead_axes))
        return tuple(grads)

    parents = [x] + [t for t in (weight, bias) if t is not None]
    return Tensor.from_op(out, tuple(parents), backward, "group_norm")


# Operadores espaciales

def bilinear_matrix(in_size: int, out_size: int, dtype=np.float64) -> np.ndarray:
    """
    Matriz de interpolación lineal 1D con align_corners=False
    Returns:
        Array [out_size, in_size] cuyas filas suman 1
    """
    matrix = np.zeros((out_size, in_size), dtype=dtype)
    scale = in_size / out_size
    for i in range(out_size):
        src = max((i + 0.5) * scale - 0.5, 0.0)
        i0 = min(int(np.floor(src)), in_size - 1)
        i1 = min(i0 + 1, in_size - 1)
        frac = src - i0
        matrix[i, i0] += 1.0 - frac
        matrix[i, i1] += frac
    return matrix


def interp2d(a: Tensor, out_size: Tuple[int, int], axes: Tuple[int, int] = (0, 1)) -> Tensor:
    """
    Interpolación bilineal separable sobre dos ejes; el resto pasa intacto
    Args:
        a: Tensor de cualquier rango
        out_size: (alto, ancho) de salida
        axes: Ejes a interpolar
    Returns:
        Tensor con los dos ejes redimensionados
    """
    ax0, ax1 = (ax % a.ndim for ax in axes)
    rows = bilinear_matrix(a.shape[ax0], out_size[0], a.dtype)
    cols = bilinear_matrix(a.shape[ax1], out_size[1], a.dtype)
    moved = np.moveaxis(a.data, (ax0, ax1), (0, 1))
    out = np.tensordot(rows, moved, axes=([1], [0]))
    out = np.moveaxis(np.tensordot(cols, np.moveaxis(out, 1, 0), axes=([1], [0])), 0, 1)
    out = np.ascontiguousarray(np.moveaxis(out, (0, 1), (ax0, ax1)))

    def backward(g):
        gm = np.moveaxis(g, (ax0, ax1), (0, 1))
        gm = np.tensordot(rows.T, gm, axes=([1], [0]))
        gm = np.moveaxis(np.tensordot(cols.T, np.moveaxis(gm, 1, 0), axes=([1], [0])), 0, 1)
        return (np.moveaxis(gm, (0, 1), (ax0, ax1)),)

    return Tensor.from_op(out, (a,), backward, "interp2d")


def _window_slices(offset: Sequence[int], stride: Sequence[int], out_extent: Sequence[int]):
    return tuple(slice(o, o + s * (n - 1) + 1, s) for o, s, n in zip(offset, stride, out_extent))


def conv4d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: Sequence[int] = (1, 1, 1, 1), padding: Sequence[int] = (0, 0, 0, 0)) -> Tensor:
    """
    Correlación cruzada 4D densa, canales al final
    Args:
        x: Tensor [A, B, C, D, in]
        weight: Tensor [k1, k2, k3, k4, in, out]
        bias: Tensor [out]
        stride, padding: Un valor por eje espacial
    Returns:
        Tensor [A', B', C', D', out]
    """
    if x.ndim != 5 or weight.ndim != 6 or x.shape[-1] != weight.shape[4]:
        raise ShapeError(f"conv4d: formas incompatibles {x.shape} y {weight.shape}")
    kernel = weight.shape[:4]
    in_ch, out_ch = weight.shape[4], weight.shape[5]
    out_extent = tuple(
        (n + 2 * p - k) // s + 1 for n, p, k, s in zip(x.shape[:4], padding, kernel, stride)
    )
    if any(o <= 0 for o in out_extent):
        raise ShapeError(
            f"conv4d: extensión de salida no positiva {out_extent} para entrada {x.shape}, "
            f"kernel {kernel}, stride {tuple(stride)}, padding {tuple(padding)}"
        )
    xp = np.pad(x.data, [(p, p) for p in padding] + [(0, 0)])
    positions = int(np.prod(out_extent))
    out = np.zeros((positions, out_ch), dtype=x.dtype)
    offsets = list(itertools.product(*(range(k) for k in kernel)))
    for offset in offsets:
        patch = xp[_window_slices(offset, stride, out_extent)].reshape(positions, in_ch)
        out += patch @ weight.data[offset]
    if bias is not None:
        out += bias.data
    out = out.reshape(out_extent + (out_ch,))

    def backward(g):
        g2 = g.reshape(positions, out_ch)
        gxp = np.zeros_like(xp)
        gw = np.zeros_like(weight.data)
        for offset in offsets:
            index = _window_slices(offset, stride, out_extent)
            patch = xp[index].reshape(positions, in_ch)
            gw[offset] = patch.T @ g2
            gxp[index] += (g2 @ weight.data[offset].T).reshape(out_extent + (in_ch,))
        unpad = tuple(slice(p, p + n) for p, n in zip(padding, x.shape[:4]))
        grads = [gxp[unpad], gw]
        if bias is not None:
            grads.append(g2.sum(axis=0))
        return tuple(grads)

    parents = (x, weight, bias) if bias is not None else (x, weight)
    return Tensor.from_op(out, parents, backward, "conv4d")


def maxpool4d(x: Tensor, window: Sequence[int], stride: Optional[Sequence[int]] = None) -> Tensor:
    """
    Max-pooling 4D sin ceil-mode, canales independientes
    Args:
        x: Tensor [A, B, C, D, ch]
        window: Ventana por eje espacial
        stride: Paso por eje (por defecto igual a la ventana)
    Returns:
        Tensor reducido; el gradiente se enruta solo al argmax
    """
    window = tuple(int(w) for w in window)
    stride = tuple(int(s) for s in (stride or window))
    if x.ndim != 5:
        raise ShapeError(f"maxpool4d: se esperaba tensor 5D, forma {x.shape}")
    if any(w > n or w <= 0 for w, n in zip(window, x.shape[:4])):
        raise ShapeError(f"maxpool4d: ventana {window} mayor que la extensión {x.shape[:4]}")
    out_extent = tuple((n - w) // s + 1 for n, w, s in zip(x.shape[:4], window, stride))
    offsets = list(itertools.product(*(range(w) for w in window)))
    best = None
    best_idx = np.zeros(out_extent + (x.shape[4],), dtype=np.int64)
    for k, offset in enumerate(offsets):
        candidate = x.data[_window_slices(offset, stride, out_extent)]
        if best is None:
            best = candidate.copy()
            continue
        better = candidate > best
        best = np.where(better, candidate, best)
        best_idx[better] = k

    def backward(g):
        grad = np.zeros_like(x.data)
        for k, offset in enumerate(offsets):
            grad[_window_slices(offset, stride, out_extent)] += g * (best_idx == k)
        return (grad,)

    return Tensor.from_op(np.ascontiguousarray(best), (x,), backward, "maxpool4d")


# Pérdidas

def cross_entropy(logits: Tensor, target: np.ndarray) -> Tensor:
    """
    Entropía cruzada media por píxel
    Args:
        logits: Tensor [..., clases]
        target: Array entero [...] con la clase correcta
    Returns:
        Tensor escalar
    """
    target = np.asarray(target, dtype=np.int64)
    if logits.shape[:-1] != target.shape:
        raise ShapeError(f"cross_entropy: logits {logits.shape} y objetivo {target.shape} incompatibles")
    classes = logits.shape[-1]
    one_hot = np.eye(classes, dtype=logits.dtype)[target]
    logp = log_softmax(logits, axis=-1)
    return neg(mean(sum_(mul(logp, Tensor(one_hot, dtype=logits.dtype)), axis=-1)))


def functional_names() -> List[str]:
    """Operaciones hacia adelante disponibles por nombre (forward_op)"""
    return sorted(_REGISTRY)


_REGISTRY = {
    "add": add, "sub": sub, "mul": mul, "div": div, "neg": neg, "pow": pow_scalar,
    "exp": exp, "log": log, "sqrt": sqrt, "clamp_min": clamp_min, "relu": relu,
    "sigmoid": sigmoid, "gelu": gelu, "matmul": matmul, "linear": linear,
    "reshape": reshape, "permute": permute, "pad": pad, "slice": slice_,
    "concat": concat, "stack": stack, "roll": roll, "take": take, "sum": sum_,
    "mean": mean, "max": max_, "softmax": softmax, "log_softmax": log_softmax,
    "layer_norm": layer_norm, "group_norm": group_norm, "interp2d": interp2d,
    "conv4d": conv4d, "maxpool4d": maxpool4d,
}


def forward_op(name: str, *inputs, **kwargs) -> Tensor:
    """
    Ejecuta una operación registrada por nombre
    Args:
        name: Nombre de la operación (ver functional_names)
        inputs: Tensores de entrada
    Returns:
        Tensor de salida, registrado en el grafo si alguna entrada requiere gradiente
    """
    op = _REGISTRY.get(name)
    if op is None:
        raise ShapeError(f"Operación desconocida: {name}")
    return op(*inputs, **kwargs)
