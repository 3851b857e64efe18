"""CSV persistence of BER records."""

from __future__ import annotations

import math

from ..errors import MusmError
from .engine import BerRecord

__all__ = ["HEADER", "format_row", "write_csv", "read_csv"]

HEADER = (
    "system,k_users,n_tx,n_rx,beta,rho,n_beams,mod_order,snr_db,"
    "bits_sent,bit_errors,ber,ml_ops,seed,wall_time_s"
)


class IoError(MusmError, OSError):
    pass


def _ber(value):
    if value is None or math.isnan(value):
        return "nan"
    return f"{value:#.6g}"


def format_row(r: BerRecord):
    return ",".join(
        [
            r.system,
            str(r.k_users),
            str(r.n_tx),
            str(r.n_rx),
            f"{r.beta:g}",
            f"{r.rho:g}",
            str(r.n_beams),
            str(r.mod_order),
            f"{r.snr_db:g}",
            str(r.bits_sent),
            str(r.bit_errors),
            _ber(r.ber),
            str(int(r.ml_ops)),
            str(r.seed),
            f"{r.wall_time_s:.3f}",
        ]
    )


def write_csv(records, path):
    """Write records in the given order, header first; UTF-8 with LF endings."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(HEADER + "\n")
            for r in records:
                fh.write(format_row(r) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_csv(path):
    """Parse a file produced by :func:`write_csv` back into records."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER:
            raise IoError(f"unexpected header in {path}")
        for line in fh:
            f = line.rstrip("\n").split(",")
            records.append(
                BerRecord(
                    system=f[0],
                    k_users=int(f[1]),
                    n_tx=int(f[2]),
                    n_rx=int(f[3]),
                    beta=float(f[4]),
                    rho=float(f[5]),
                    n_beams=int(f[6]),
                    mod_order=int(f[7]),
                    snr_db=float(f[8]),
                    bits_sent=int(f[9]),
                    bit_errors=int(f[10]),
                    ber=float(f[11]),
                    ml_ops=int(f[12]),
                    seed=int(f[13]),
                    wall_time_s=float(f[14]),
                )
            )
    return records
