"""
WaveGAN Tensor-Engine - Tensor und Tape

Dichte NCHW-Tensoren mit Reverse-Mode-Autodiff (define-by-run).
Jede Operation wird auf dem Tape des aktuellen Threads protokolliert;
backward() läuft das Tape exakt rückwärts ab und gibt es danach frei.
"""

import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from errors import GradientError, NumericalError, ShapeError


# Training läuft in 32 Bit, der Gradienten-Check in 64 Bit
DEFAULT_DTYPE = np.float32
SUPPORTED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))
MAX_RANK = 4

_uid_counter = itertools.count(1)

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """
    Dichter Tensor (bis Rang 4) mit optionalem Gradientenknoten.

    Blätter mit requires_grad=True erhalten nach backward() ihren Gradienten
    in `grad`. Nicht-Blätter verweisen über `_record` auf ihre erzeugende
    Operation im Tape.
    """

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        arr = np.asarray(data)
        if arr.dtype not in SUPPORTED_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        if arr.ndim > MAX_RANK:
            raise ShapeError(f"Tensor-Rang {arr.ndim} > {MAX_RANK} nicht unterstützt")
        self.data: np.ndarray = arr
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self.uid = next(_uid_counter)
        self._record: Optional["TapeRecord"] = None

    # -------------------------------------------------------------------------
    # Eigenschaften
    # -------------------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._record is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() braucht genau ein Element, nicht {self.data.size}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        """Konstante Kopie ohne Gradientenknoten."""
        return Tensor(self.data.copy())

    def astype(self, dtype) -> "Tensor":
        """Neues Blatt mit anderem Datentyp (z.B. float64 für Gradienten-Checks)."""
        return Tensor(self.data.astype(dtype), requires_grad=self.requires_grad, name=self.name)

    def zero_grad(self):
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        label = f" '{self.name}'" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, dtype={self.dtype}{flag})"

    # -------------------------------------------------------------------------
    # Operatoren (delegieren an engine.ops)
    # -------------------------------------------------------------------------

    def __add__(self, other):
        from engine import ops
        return ops.add(self, as_tensor(other, like=self))

    def __radd__(self, other):
        from engine import ops
        return ops.add(as_tensor(other, like=self), self)

    def __sub__(self, other):
        from engine import ops
        return ops.sub(self, as_tensor(other, like=self))

    def __rsub__(self, other):
        from engine import ops
        return ops.sub(as_tensor(other, like=self), self)

    def __mul__(self, other):
        from engine import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, as_tensor(other, like=self))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        from engine import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, 1.0 / float(other))
        return ops.div(self, as_tensor(other, like=self))

    def __neg__(self):
        from engine import ops
        return ops.neg(self)


def as_tensor(value, like: Optional[Tensor] = None) -> Tensor:
    """Wandelt Skalare/Arrays in konstante Tensoren (Datentyp wie `like`)."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else DEFAULT_DTYPE
    return Tensor(np.asarray(value, dtype=dtype))


def parameter(data, name: Optional[str] = None) -> Tensor:
    """Erzeugt ein trainierbares Blatt."""
    return Tensor(data, requires_grad=True, name=name)


# =============================================================================
# TAPE
# =============================================================================

@dataclass(eq=False)
class TapeRecord:
    """Eine protokollierte Operation: Art, Eltern, Ergebnis, Rückwärtsfunktion."""
    op: str
    parents: Tuple[Tensor, ...]
    output: Tensor
    backward_fn: BackwardFn


class Tape:
    """
    Geordnete Liste der Operationen eines Forward-Durchlaufs.

    Eltern stehen immer vor ihren Kindern, daher genügt ein einziger
    Rückwärtsdurchlauf in umgekehrter Reihenfolge.
    """

    def __init__(self):
        self.records: List[TapeRecord] = []

    def record(self, op: str, parents: Tuple[Tensor, ...], output: Tensor, backward_fn: BackwardFn):
        rec = TapeRecord(op=op, parents=parents, output=output, backward_fn=backward_fn)
        output._record = rec
        self.records.append(rec)

    def clear(self):
        """Gibt das Tape frei; alle Zwischenergebnisse werden zu Konstanten."""
        for rec in self.records:
            rec.output._record = None
            rec.output.requires_grad = False
        self.records = []

    def __len__(self) -> int:
        return len(self.records)


# Ein Tape pro Thread, kein geteilter Zustand zwischen Threads
_local = threading.local()


def current_tape() -> Tape:
    tape = getattr(_local, "tape", None)
    if tape is None:
        tape = Tape()
        _local.tape = tape
    return tape


def is_grad_enabled() -> bool:
    return getattr(_local, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Unterdrückt das Protokollieren (Evaluation, Fake-Bilder im D-Schritt)."""
    previous = is_grad_enabled()
    _local.grad_enabled = False
    try:
        yield
    finally:
        _local.grad_enabled = previous


def make_result(op: str, data: np.ndarray, parents: Sequence[Tensor], backward_fn: BackwardFn) -> Tensor:
    """
    Verpackt das Ergebnis einer Operation und protokolliert sie bei Bedarf.

    Nicht-endliche Werte sind ein Fehlerzustand und werden nie weitergereicht.
    """
    if not np.all(np.isfinite(data)):
        raise NumericalError(f"Nicht-endliche Werte nach Operation '{op}'")
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        current_tape().record(op, tuple(parents), out, backward_fn)
    return out


def unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Summiert einen Gradienten auf die (gebroadcastete) Eingangsform zurück."""
    if grad.shape == shape:
        return grad
    if len(shape) == 0:
        return np.asarray(grad.sum(), dtype=grad.dtype)
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    axes = tuple(i for i, (g, s) in enumerate(zip(grad.shape, shape)) if s == 1 and g != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


# =============================================================================
# BACKWARD
# =============================================================================

def backward(loss: Tensor) -> Dict[int, np.ndarray]:
    """
    Ein Rückwärtsdurchlauf über das Tape des aktuellen Threads.

    Returns:
        Dict Blatt-uid -> Gradient für alle erreichbaren Blätter mit
        requires_grad. Die Gradienten stehen zusätzlich in `leaf.grad`.
        Das Tape ist danach freigegeben.
    """
    if loss.size != 1:
        raise GradientError(f"backward() braucht einen Skalar, nicht Form {loss.shape}")
    tape = current_tape()
    if not loss.requires_grad or loss._record is None or loss._record not in tape.records:
        raise GradientError("backward() auf einem abgekoppelten Tensor (nicht auf dem Tape)")

    grads: Dict[int, np.ndarray] = {loss.uid: np.ones_like(loss.data)}
    leaf_grads: Dict[int, np.ndarray] = {}
    leaves: Dict[int, Tensor] = {}

    for rec in reversed(tape.records):
        g = grads.pop(rec.output.uid, None)
        if g is None:
            continue
        parent_grads = rec.backward_fn(g)
        for parent, pg in zip(rec.parents, parent_grads):
            if pg is None or not parent.requires_grad:
                continue
            pg = unbroadcast(np.asarray(pg, dtype=parent.dtype), parent.shape)
            if parent._record is None:
                # Mehrfach genutzte Blätter akkumulieren additiv
                leaves[parent.uid] = parent
                if parent.uid in leaf_grads:
                    leaf_grads[parent.uid] = leaf_grads[parent.uid] + pg
                else:
                    leaf_grads[parent.uid] = pg
            elif parent.uid in grads:
                grads[parent.uid] = grads[parent.uid] + pg
            else:
                grads[parent.uid] = pg

    for uid, leaf in leaves.items():
        leaf.grad = leaf_grads[uid]

    tape.clear()
    return leaf_grads
