"""CSV series output"""
from pathlib import Path
from typing import Dict, Sequence, Union

import pandas as pd

FLOAT_FORMAT = "%.17g"


def write_table(path: Union[str, Path], columns: Dict[str, Sequence]) -> str:
    """Write columns in the given order, floats with 17 significant digits"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(columns).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    print(f"📄 Wrote {path}")
    return str(path)
