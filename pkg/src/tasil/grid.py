"""Patch label grids: class vocabularies, TLG file I/O, class mapping, agreement metrics.

A whole slide is abstracted as a rectangular lattice of patches, each carrying
one tissue-class label. Two vocabularies exist: the seven-class pathologist
annotation vocabulary and the four-class analysis vocabulary that every score
is computed on. Grids are immutable after construction and all operations here
are pure functions, safe to call concurrently on shared grids.
"""

from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

DEFAULT_PATCH_SIZE_UM = 35.0


class AnnotationClass(IntEnum):
    """Seven-class pathologist annotation vocabulary (single-character file codes)."""

    TUMOUR = 0
    LYMPHOCYTE_INFLAMMATORY = 1
    STROMA = 2
    KERATIN = 3
    EPITHELIUM = 4
    ARTIFACTS = 5
    OTHER = 6

    @property
    def code(self) -> str:
        return _CLASS_CODES[AnnotationClass][self.value]

    @classmethod
    def from_code(cls, code: str) -> "AnnotationClass":
        return _class_from_code(cls, code)


class AnalysisClass(IntEnum):
    """Four-class analysis vocabulary: tumour, tumour-associated stroma (TAS),
    lymphocyte, and everything else as non-ROI. Non-ROI never participates in
    co-occurrence counting."""

    TUMOUR = 0
    TAS = 1
    LYMPHOCYTE = 2
    NON_ROI = 3

    @property
    def code(self) -> str:
        return _CLASS_CODES[AnalysisClass][self.value]

    @classmethod
    def from_code(cls, code: str) -> "AnalysisClass":
        return _class_from_code(cls, code)


_CLASS_CODES: dict[type, str] = {
    AnnotationClass: "TLSKEAO",
    AnalysisClass: "TSLN",
}


def _class_from_code(cls, code):
    idx = _CLASS_CODES[cls].find(code)
    if idx < 0 or len(code) != 1:
        raise ValueError(f"unknown {cls.__name__} code {code!r}")
    return cls(idx)


#: Reduction of the annotation vocabulary onto the analysis vocabulary.
#: Stroma maps to TAS because the upstream segmenter emits tumour-associated
#: stroma as a direct class; keratin, epithelium, artifacts and other tissue
#: all collapse into non-ROI.
ANNOTATION_TO_ANALYSIS: dict[AnnotationClass, AnalysisClass] = {
    AnnotationClass.TUMOUR: AnalysisClass.TUMOUR,
    AnnotationClass.LYMPHOCYTE_INFLAMMATORY: AnalysisClass.LYMPHOCYTE,
    AnnotationClass.STROMA: AnalysisClass.TAS,
    AnnotationClass.KERATIN: AnalysisClass.NON_ROI,
    AnnotationClass.EPITHELIUM: AnalysisClass.NON_ROI,
    AnnotationClass.ARTIFACTS: AnalysisClass.NON_ROI,
    AnnotationClass.OTHER: AnalysisClass.NON_ROI,
}


@dataclass(frozen=True, eq=False)
class PatchLabelGrid:
    """One slide's patch labels on a rows x cols lattice.

    ``labels`` is a read-only 2D uint8 array whose values are members of
    ``classes`` (AnalysisClass by default, AnnotationClass for raw annotation
    grids). ``patch_size_um`` is carried for reporting only and never affects
    any score.
    """

    slide_id: str
    labels: np.ndarray
    classes: type[IntEnum] = AnalysisClass
    patch_size_um: float = DEFAULT_PATCH_SIZE_UM

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=np.uint8)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("labels must be a 2D array with at least one row and column")
        if self.classes not in _CLASS_CODES:
            raise ValueError(f"unsupported class vocabulary {self.classes!r}")
        if int(arr.max()) >= len(self.classes):
            raise ValueError(f"label value {int(arr.max())} outside {self.classes.__name__}")
        if not self.patch_size_um > 0:
            raise ValueError("patch_size_um must be positive")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    @property
    def rows(self) -> int:
        return self.labels.shape[0]

    @property
    def cols(self) -> int:
        return self.labels.shape[1]

    @property
    def n_patches(self) -> int:
        return self.labels.size

    @classmethod
    def from_flat(cls, slide_id, rows, cols, labels, classes=AnalysisClass,
                  patch_size_um=DEFAULT_PATCH_SIZE_UM) -> "PatchLabelGrid":
        """Build a grid from a row-major flat label sequence (enum members or ints)."""
        seq = [int(v) for v in labels]
        if len(seq) != rows * cols:
            raise ValueError(f"expected {rows * cols} labels, got {len(seq)}")
        arr = np.array(seq, dtype=np.uint8).reshape(rows, cols)
        return cls(slide_id, arr, classes, patch_size_um)

    def flat_labels(self) -> list:
        """Row-major list of enum members."""
        return [self.classes(int(v)) for v in self.labels.ravel()]

    def label_at(self, row: int, col: int):
        return self.classes(int(self.labels[row, col]))

    def __eq__(self, other):
        if not isinstance(other, PatchLabelGrid):
            return NotImplemented
        return (self.slide_id == other.slide_id
                and self.classes is other.classes
                and self.patch_size_um == other.patch_size_um
                and np.array_equal(self.labels, other.labels))

    def __hash__(self):
        return hash((self.slide_id, self.classes, self.patch_size_um, self.labels.tobytes()))


class TLGParseError(ValueError):
    """Malformed TLG file; names the offending 1-based line."""

    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


def load_grid(path, classes: type[IntEnum] = AnalysisClass) -> PatchLabelGrid:
    """Read a TLG grid file.

    Format: one header line ``TLG v1 <rows> <cols> <patch_size_um>`` followed
    by ``rows`` lines of ``cols`` single-character class codes. The file codes
    are interpreted against ``classes`` (the format itself does not record the
    vocabulary; pass AnnotationClass for raw annotation grids). The slide id is
    taken from the file name stem.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline
    if not lines:
        raise TLGParseError(path, 1, "malformed header: empty file")

    fields = lines[0].split(" ")
    if len(fields) != 5 or fields[0] != "TLG" or fields[1] != "v1":
        raise TLGParseError(path, 1, f"malformed header: expected 'TLG v1 <rows> <cols> <patch_size_um>', got {lines[0]!r}")
    try:
        rows, cols = int(fields[2]), int(fields[3])
        patch_size_um = float(fields[4])
    except ValueError:
        raise TLGParseError(path, 1, f"malformed header: non-numeric dimension in {lines[0]!r}") from None
    if rows < 1 or cols < 1 or not patch_size_um > 0:
        raise TLGParseError(path, 1, "malformed header: dimensions and patch size must be positive")
    if len(lines) - 1 < rows:
        raise TLGParseError(path, len(lines), f"unexpected end of file: expected {rows} rows, got {len(lines) - 1}")
    if len(lines) - 1 > rows:
        raise TLGParseError(path, rows + 2, f"trailing content: expected {rows} rows")

    lut = np.full(128, 255, dtype=np.uint8)
    for member in classes:
        lut[ord(member.code)] = member.value

    arr = np.empty((rows, cols), dtype=np.uint8)
    for r in range(rows):
        line = lines[1 + r]
        if len(line) != cols:
            raise TLGParseError(path, r + 2, f"row length mismatch: expected {cols}, got {len(line)}")
        raw = np.frombuffer(line.encode("ascii", errors="replace"), dtype=np.uint8)
        vals = lut[np.minimum(raw, 127)]
        bad = np.nonzero(vals == 255)[0]
        if bad.size:
            raise TLGParseError(path, r + 2, f"unknown class code {line[bad[0]]!r}")
        arr[r] = vals
    return PatchLabelGrid(path.stem, arr, classes, patch_size_um)


def save_grid(grid: PatchLabelGrid, path) -> None:
    """Write a grid in canonical TLG form (LF endings, repr-formatted patch size).

    Output is deterministic: equal grids produce byte-identical files, and
    load_grid(save_grid(g)) returns a grid equal to g when the file is named
    ``<slide_id>.tlg``.
    """
    path = Path(path)
    codes = _CLASS_CODES[grid.classes]
    code_bytes = np.frombuffer(codes.encode("ascii"), dtype=np.uint8)
    body = code_bytes[grid.labels]
    lines = [f"TLG v1 {grid.rows} {grid.cols} {grid.patch_size_um!r}"]
    lines.extend(row.tobytes().decode("ascii") for row in body)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def map_to_analysis_classes(grid: PatchLabelGrid, tas_max_distance: int | None = None) -> PatchLabelGrid:
    """Reduce an annotation grid to the four analysis classes.

    Total per-cell mapping, dimension preserving. With ``tas_max_distance`` set,
    only stroma within that Chebyshev distance (in patches) of a tumour patch is
    retained as TAS; farther stroma becomes non-ROI. Default keeps all stroma,
    since the annotation vocabulary's stroma class is already tumour-associated.
    """
    if grid.classes is not AnnotationClass:
        raise ValueError("map_to_analysis_classes expects an AnnotationClass grid")
    lut = np.empty(len(AnnotationClass), dtype=np.uint8)
    for src, dst in ANNOTATION_TO_ANALYSIS.items():
        lut[src.value] = dst.value
    mapped = lut[grid.labels]
    if tas_max_distance is not None:
        if tas_max_distance < 0:
            raise ValueError("tas_max_distance must be non-negative")
        near = _chebyshev_dilate(mapped == AnalysisClass.TUMOUR, tas_max_distance)
        far_tas = (mapped == AnalysisClass.TAS) & ~near
        mapped = mapped.copy()
        mapped[far_tas] = AnalysisClass.NON_ROI
    return PatchLabelGrid(grid.slide_id, mapped, AnalysisClass, grid.patch_size_um)


def _chebyshev_dilate(mask: np.ndarray, distance: int) -> np.ndarray:
    """Cells within the given Chebyshev distance of a True cell."""
    out = mask.copy()
    for _ in range(distance):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        grown[1:, 1:] |= out[:-1, :-1]
        grown[1:, :-1] |= out[:-1, 1:]
        grown[:-1, 1:] |= out[1:, :-1]
        grown[:-1, :-1] |= out[1:, 1:]
        out = grown
    return out


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """k x k agreement counts; entry (i, j) = patches with true class i predicted as j."""

    counts: np.ndarray
    classes: type[IntEnum]

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if arr.shape != (k, k):
            raise ValueError(f"counts must be {k}x{k} for {self.classes.__name__}")
        if (arr < 0).any():
            raise ValueError("counts must be non-negative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion_matrix(truth: PatchLabelGrid, pred: PatchLabelGrid) -> ConfusionMatrix:
    """Position-by-position agreement counts for two grids of identical shape and vocabulary."""
    if truth.classes is not pred.classes:
        raise ValueError("grids use different class vocabularies")
    if truth.labels.shape != pred.labels.shape:
        raise ValueError(f"dimension mismatch: {truth.labels.shape} vs {pred.labels.shape}")
    k = len(truth.classes)
    idx = truth.labels.astype(np.int64).ravel() * k + pred.labels.astype(np.int64).ravel()
    counts = np.bincount(idx, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts, truth.classes)


def accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of positions where truth and prediction agree (trace / total)."""
    if cm.total == 0:
        raise ValueError("accuracy is undefined for an empty confusion matrix")
    return float(np.trace(cm.counts)) / cm.total


def macro_f1(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1 scores.

    A class absent from both truth and predictions contributes F1 = 0 and stays
    in the mean, which penalises missing classes and keeps the metric
    deterministic.
    """
    if cm.total == 0:
        raise ValueError("macro F1 is undefined for an empty confusion matrix")
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    actual = counts.sum(axis=1)
    f1 = np.zeros(len(cm.classes))
    denom = predicted + actual  # 2*tp + fp + fn
    nonzero = denom > 0
    f1[nonzero] = 2.0 * tp[nonzero] / denom[nonzero]
    return float(f1.mean())


def class_counts(grid: PatchLabelGrid) -> dict:
    """Number of patches per class, keyed by enum member (all members present)."""
    raw = np.bincount(grid.labels.ravel(), minlength=len(grid.classes))
    return {member: int(raw[member.value]) for member in grid.classes}


def class_fractions(grid: PatchLabelGrid) -> dict:
    """Fraction of patches per class; fractions sum to 1."""
    counts = class_counts(grid)
    total = grid.n_patches
    return {member: counts[member] / total for member in grid.classes}
