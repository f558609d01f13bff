"""
Binary frame files, basis checkpoints and atomic file writes.

Frame file layout (little endian): two int64 header values [n, count] followed by
n * count float64 values stored column by column (frame after frame).

Basis checkpoint layout (little endian float64): header
[n, r, tau, alpha, alpha0, sigma_min_sq, has_mean, train_count], then the n x r basis
row-major, the r singular values and, when has_mean is 1, the length-n mean.

Version: 1.0
"""

# External imports with versions
import os  # built-in
import tempfile  # built-in
from pathlib import Path  # built-in
from typing import Dict, Optional, Union  # built-in

import numpy as np  # numpy v1.24+
import structlog  # structlog v23.1+
import tenacity  # tenacity v8.2+

# Internal imports
from reprocs.core.exceptions import ValidationException
from reprocs.models.frames import FrameSequence
from reprocs.models.subspace import SubspaceEstimate
from reprocs.utils.validators import validate_finite, validate_orthonormal

# Configure structured logging
logger = structlog.get_logger(__name__)

FRAME_HEADER_DTYPE = np.dtype("<i8")
FRAME_BODY_DTYPE = np.dtype("<f8")
CHECKPOINT_HEADER_SIZE = 8
GROUND_TRUTH_STREAMS = ("M", "L", "S", "O")
SUPPORTS_STREAM = "supports"
FRAME_SUFFIX = ".frames"

PathLike = Union[str, Path]


@tenacity.retry(
    stop=tenacity.stop_after_attempt(3),
    wait=tenacity.wait_exponential(multiplier=0.1, min=0.1, max=2),
    retry=tenacity.retry_if_exception_type(OSError),
    reraise=True,
    before_sleep=lambda retry_state: logger.warning(
        "write_retry",
        attempt=retry_state.attempt_number,
        error=str(retry_state.outcome.exception())
    )
)
def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """
    Writes to a temporary file in the target directory and renames it into place,
    so readers never observe a partially written file.

    Raises:
        OSError: After the final failed attempt
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_text(path: PathLike, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def encode_frames(frames: np.ndarray) -> bytes:
    """Serializes an n x count matrix in the frame-file layout."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise ValidationException("Frames must be an n x count matrix", details={"ndim": frames.ndim})
    header = np.array(frames.shape, dtype=FRAME_HEADER_DTYPE)
    return header.tobytes() + np.asfortranarray(frames).astype(FRAME_BODY_DTYPE).tobytes(order="F")


def decode_frames(payload: bytes, source: str = "<bytes>") -> np.ndarray:
    """
    Parses frame-file bytes into an n x count matrix.

    Raises:
        ValidationException: On a truncated, oversized or non-finite file
    """
    header_size = 2 * FRAME_HEADER_DTYPE.itemsize
    if len(payload) < header_size:
        raise ValidationException("Frame file is shorter than its header", details={"path": source, "size": len(payload)})
    n, count = (int(v) for v in np.frombuffer(payload[:header_size], dtype=FRAME_HEADER_DTYPE))
    if n < 0 or count < 0:
        raise ValidationException("Frame file header is negative", details={"path": source, "n": n, "count": count})
    expected = header_size + n * count * FRAME_BODY_DTYPE.itemsize
    if len(payload) != expected:
        raise ValidationException(
            f"Frame file size {len(payload)} does not match header ({n} x {count})",
            details={"path": source, "expected": expected, "actual": len(payload)}
        )
    body = np.frombuffer(payload[header_size:], dtype=FRAME_BODY_DTYPE)
    frames = body.reshape((n, count), order="F").astype(np.float64)
    return validate_finite(frames, f"frames in {source}")


def write_frames(path: PathLike, frames: np.ndarray) -> Path:
    path = atomic_write_bytes(path, encode_frames(frames))
    logger.info("frames_written", path=str(path), n=int(frames.shape[0]), count=int(frames.shape[1]))
    return path


def read_frames(path: PathLike) -> np.ndarray:
    """
    Raises:
        ValidationException: If the file is missing or corrupt
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except FileNotFoundError:
        raise ValidationException(f"Frame file not found: {path}", details={"path": str(path)})
    return decode_frames(payload, str(path))


def support_indicator(sequence: FrameSequence) -> np.ndarray:
    """n x count 0/1 matrix marking the true support of every frame."""
    indicator = np.zeros((sequence.n, sequence.count))
    for k, idx in enumerate(sequence.supports):
        indicator[idx, k] = 1.0
    return indicator


def write_ground_truth(directory: PathLike, sequence: FrameSequence) -> Dict[str, Path]:
    """Writes M, L, S, O and the support indicator as separate frame files."""
    directory = Path(directory)
    written = {}
    for name in GROUND_TRUTH_STREAMS:
        matrix = getattr(sequence, name)
        if matrix is not None:
            written[name] = write_frames(directory / f"{name}{FRAME_SUFFIX}", matrix)
    written[SUPPORTS_STREAM] = write_frames(directory / f"{SUPPORTS_STREAM}{FRAME_SUFFIX}", support_indicator(sequence))
    return written


def encode_checkpoint(est: SubspaceEstimate) -> bytes:
    has_mean = est.mean is not None
    header = np.array([
        est.n, est.rank, est.tau, est.alpha, est.alpha0, est.sigma_min_sq, float(has_mean), est.train_count,
    ], dtype=FRAME_BODY_DTYPE)
    parts = [header, np.ascontiguousarray(est.basis).reshape(-1), est.singvals]
    if has_mean:
        parts.append(np.asarray(est.mean, dtype=np.float64))
    return np.concatenate([np.asarray(p, dtype=FRAME_BODY_DTYPE) for p in parts]).tobytes()


def decode_checkpoint(payload: bytes, source: str = "<bytes>") -> SubspaceEstimate:
    """
    Raises:
        ValidationException: On a malformed checkpoint or a non-orthonormal basis
    """
    values = np.frombuffer(payload, dtype=FRAME_BODY_DTYPE) if len(payload) % 8 == 0 else None
    if values is None or values.size < CHECKPOINT_HEADER_SIZE:
        raise ValidationException("Basis checkpoint is truncated", details={"path": source, "size": len(payload)})
    n, r, tau = int(values[0]), int(values[1]), int(values[2])
    alpha, alpha0, sigma_min_sq = float(values[3]), float(values[4]), float(values[5])
    has_mean, train_count = bool(values[6]), int(values[7])
    expected = CHECKPOINT_HEADER_SIZE + n * r + r + (n if has_mean else 0)
    if n <= 0 or r < 0 or r > n or tau <= 0 or values.size != expected:
        raise ValidationException(
            "Basis checkpoint header does not match its contents",
            details={"path": source, "n": n, "r": r, "tau": tau, "values": int(values.size)}
        )
    body = values[CHECKPOINT_HEADER_SIZE:].astype(np.float64)
    basis = body[:n * r].reshape(n, r)
    singvals = body[n * r:n * r + r].copy()
    mean: Optional[np.ndarray] = body[n * r + r:].copy() if has_mean else None
    validate_finite(body, f"checkpoint {source}")
    validate_orthonormal(basis, name=f"basis in {source}")
    return SubspaceEstimate(
        basis=basis.copy(),
        singvals=singvals,
        tau=tau,
        alpha=alpha,
        alpha0=alpha0,
        sigma_min_sq=sigma_min_sq,
        mean=mean,
        buffer=[],
        train_count=train_count,
        frames_seen=train_count,
    )


def save_checkpoint(path: PathLike, est: SubspaceEstimate) -> Path:
    path = atomic_write_bytes(path, encode_checkpoint(est))
    logger.info("checkpoint_written", path=str(path), n=est.n, rank=est.rank)
    return path


def load_checkpoint(path: PathLike) -> SubspaceEstimate:
    path = Path(path)
    try:
        payload = path.read_bytes()
    except FileNotFoundError:
        raise ValidationException(f"Basis checkpoint not found: {path}", details={"path": str(path)})
    return decode_checkpoint(payload, str(path))
