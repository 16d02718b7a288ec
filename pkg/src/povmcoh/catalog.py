"""Named builtin measurements and channels, so CLI runs need no fixture files.

POVM names:
    z:<theta>,<phi>   rotated qubit basis measurement (angles accept "pi"
                      expressions such as pi/2 or 3pi/4)
    appendix-f-g      the dichotomic qutrit measurement of the damping demo
    appendix-d        4-dimensional pair measurement with one coherent block

Channel names:
    dephasing               total dephasing in the given dimension
    amplitude-damping:<g>   damping towards |0> with rate g
    appendix-d              block shift on d=4 pairing the coherent block twice
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .channels import (
    KrausChannel,
    amplitude_damping,
    channel_from_json,
    dephasing_channel,
)
from .experiment import MeasurementDirection, qutrit_dichotomic_povm, z_theta_phi
from .linalg import ValidationError
from .povm import Povm, povm_from_json

__all__ = [
    "parse_angle",
    "coherent_block_povm",
    "block_shift_channel",
    "builtin_povm",
    "builtin_channel",
    "load_povm",
    "load_channel",
    "POVM_BUILTINS",
    "CHANNEL_BUILTINS",
]

_ANGLE_RE = re.compile(
    r"^(?P<sign>-?)(?P<coef>\d+(?:\.\d+)?)?(?P<pi>pi)?(?:/(?P<div>\d+(?:\.\d+)?))?$"
)


def parse_angle(text: str) -> float:
    """Parse '0.5', 'pi', 'pi/2', '3pi/4', '-pi/8' style angle strings."""
    token = text.strip().replace(" ", "")
    match = _ANGLE_RE.match(token)
    if not match or (match.group("coef") is None and match.group("pi") is None):
        raise ValidationError(f"cannot parse angle {text!r}")
    value = float(match.group("coef")) if match.group("coef") else 1.0
    if match.group("pi"):
        value *= np.pi
    if match.group("div"):
        value /= float(match.group("div"))
    return -value if match.group("sign") else value


def coherent_block_povm() -> Povm:
    """Two-outcome d=4 measurement: one maximally coherent 2x2 block plus a
    flat incoherent remainder.  Its l1 quantity grows under the block-shift
    channel's dual action while the proper monotones do not."""
    plus = np.zeros((4, 4), dtype=complex)
    plus[:2, :2] = [[0.5, 0.5], [0.5, 0.5]]
    plus[2, 2] = plus[3, 3] = 0.5
    minus = np.zeros((4, 4), dtype=complex)
    minus[:2, :2] = [[0.5, -0.5], [-0.5, 0.5]]
    minus[2, 2] = minus[3, 3] = 0.5
    return Povm(np.array([plus, minus]))


def block_shift_channel() -> KrausChannel:
    """d=4 channel keeping the {0,1} block or shifting {2,3} onto it."""
    k0 = np.zeros((4, 4), dtype=complex)
    k0[0, 0] = k0[1, 1] = 1.0
    k1 = np.zeros((4, 4), dtype=complex)
    k1[0, 2] = k1[1, 3] = 1.0
    return KrausChannel(np.array([k0, k1]))


POVM_BUILTINS = ("z:<theta>,<phi>", "appendix-f-g", "appendix-d")
CHANNEL_BUILTINS = ("dephasing", "amplitude-damping:<gamma>", "appendix-d")


def builtin_povm(name: str) -> Povm | None:
    """Resolve a builtin measurement name, or None if the name is unknown."""
    token = name.strip()
    if token.startswith("z:"):
        parts = token[2:].split(",")
        if len(parts) != 2:
            raise ValidationError(f"expected z:<theta>,<phi>, got {name!r}")
        theta, phi = (parse_angle(p) for p in parts)
        return z_theta_phi(MeasurementDirection(theta, phi))
    if token == "appendix-f-g":
        return qutrit_dichotomic_povm()
    if token == "appendix-d":
        return coherent_block_povm()
    return None


def builtin_channel(name: str, dim: int | None = None) -> KrausChannel | None:
    """Resolve a builtin channel name, or None if the name is unknown."""
    token = name.strip()
    if token == "dephasing":
        if dim is None:
            raise ValidationError("dephasing needs a dimension (taken from the POVM)")
        return dephasing_channel(dim)
    if token.startswith("amplitude-damping:"):
        gamma = float(token.split(":", 1)[1])
        if dim is None:
            raise ValidationError(
                "amplitude-damping needs a dimension (taken from the POVM)"
            )
        return amplitude_damping(dim, gamma)
    if token == "appendix-d":
        channel = block_shift_channel()
        if dim is not None and dim != channel.dim:
            raise ValidationError(
                f"builtin channel {name!r} acts on d=4, requested d={dim}"
            )
        return channel
    return None


def load_povm(source: str) -> Povm:
    """Builtin name or path to a POVM JSON file."""
    builtin = builtin_povm(source)
    if builtin is not None:
        return builtin
    path = Path(source)
    if not path.exists():
        raise ValidationError(
            f"{source!r} is neither a builtin POVM ({', '.join(POVM_BUILTINS)}) "
            f"nor an existing file"
        )
    return povm_from_json(json.loads(path.read_text()))


def load_channel(source: str, dim: int | None = None) -> KrausChannel:
    """Builtin name or path to a channel JSON file."""
    builtin = builtin_channel(source, dim)
    if builtin is not None:
        return builtin
    path = Path(source)
    if not path.exists():
        raise ValidationError(
            f"{source!r} is neither a builtin channel ({', '.join(CHANNEL_BUILTINS)}) "
            f"nor an existing file"
        )
    return channel_from_json(json.loads(path.read_text()))
