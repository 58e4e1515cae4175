"""Grid-ruled sheet digitization.

Images are uint8 numpy arrays: (H, W) grayscale or (H, W, 3) RGB. Tables are
lists of rows of cell strings, with "" for a blank cell.
"""

from ._core import (
    Config,
    ConfigError,
    DegenerateGrid,
    Error,
    FormatError,
    SpecError,
    UndefinedMetric,
    accuracy,
    adaptive_threshold,
    cer,
    classify,
    compare_tables,
    connected_components,
    detect_grid,
    digit_samples,
    digitize,
    f1,
    gaussian_blur,
    group_positions,
    levenshtein,
    load_image,
    morph_open,
    precision,
    recall,
    render_sheet,
    report,
    resize,
    rotate,
    save_image,
    to_grayscale,
    train,
    wer,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
