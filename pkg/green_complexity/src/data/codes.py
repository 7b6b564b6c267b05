"""Activity codes for the supported classification schemes.

HS product codes are even-length numeric strings (2, 4 or 6 digits). IPC and
CPC symbols share one syntax: a section letter and two class digits, an
optional subclass letter, then an optional ``group/subgroup`` suffix, e.g.
``"Y02E 10/50"``. Custom codes are free-form tokens.
"""
import re
from dataclasses import dataclass

from green_complexity.src.errors import DataError

HS = "HS"
IPC = "IPC"
CPC = "CPC"
CUSTOM = "custom"
SCHEMES = (HS, IPC, CPC, CUSTOM)

# IPC and CPC can be matched against each other, HS and custom only with themselves
COMPATIBLE = {
    HS: {HS},
    IPC: {IPC, CPC},
    CPC: {IPC, CPC},
    CUSTOM: {CUSTOM},
}

_HS_PATTERN = re.compile(r"^(?:\d{2}){1,3}$")
_PATENT_PATTERN = re.compile(r"^([A-Z]\d{2})([A-Z](\d{1,4}(/\d{1,6})?)?)?$")


def normalize_scheme(scheme):
    """Return the canonical scheme tag, raising on unknown schemes."""
    if scheme is None:
        raise DataError("activity scheme is missing")
    key = str(scheme).strip()
    for known in SCHEMES:
        if key.upper() == known.upper():
            return known
    raise DataError(f"unknown classification scheme {scheme!r}; expected one of {SCHEMES}")


def normalize_code(code, scheme):
    """Fold a raw code string into its comparison form.

    Whitespace is removed and letters upper-cased for IPC/CPC. HS codes only
    lose surrounding whitespace; custom codes are kept verbatim apart from
    surrounding whitespace.
    """
    text = str(code).strip()
    if scheme in (IPC, CPC):
        return re.sub(r"\s+", "", text).upper()
    return text


def _patent_depth(code):
    match = _PATENT_PATTERN.match(code)
    if match is None:
        return None
    if match.group(4):
        return 4
    if match.group(3):
        return 3
    if match.group(2):
        return 2
    return 1


def is_valid(code, scheme):
    """Whether ``code`` (already normalized) is legal in ``scheme``."""
    if not code:
        return False
    if scheme == HS:
        return bool(_HS_PATTERN.match(code))
    if scheme in (IPC, CPC):
        return _patent_depth(code) is not None
    return not any(ch.isspace() for ch in code) and "," not in code


@dataclass(frozen=True, order=True)
class ActivityCode:
    """A classification code with its scheme.

    ``code`` holds the normalized form; ``str()`` renders the conventional
    spelling (``"Y02E 10/50"`` for patent symbols).
    """
    scheme: str
    code: str

    def __post_init__(self):
        if not is_valid(self.code, self.scheme):
            raise DataError(f"{self.code!r} is not a valid {self.scheme} code")

    @classmethod
    def parse(cls, raw, scheme):
        scheme = normalize_scheme(scheme)
        return cls(scheme, normalize_code(raw, scheme))

    @property
    def digits(self):
        """Hierarchy depth.

        Number of digits for HS; level for IPC/CPC (1 class, 2 subclass,
        3 main group, 4 subgroup); number of characters for custom codes.
        """
        if self.scheme == HS:
            return len(self.code)
        if self.scheme in (IPC, CPC):
            return _patent_depth(self.code)
        return len(self.code)

    def truncate(self, digits):
        """Cut the code to ``digits`` (HS digits or IPC/CPC levels).

        Codes already at or above the requested depth are returned unchanged.
        """
        if digits is None or digits >= self.digits:
            return self
        if digits < 1:
            raise DataError(f"aggregation depth must be >= 1, got {digits}")
        if self.scheme == HS:
            if digits % 2:
                raise DataError(f"HS aggregation depth must be even, got {digits}")
            return ActivityCode(HS, self.code[:digits])
        if self.scheme in (IPC, CPC):
            match = _PATENT_PATTERN.match(self.code)
            klass, subclass = match.group(1), self.code[3]
            if digits == 1:
                return ActivityCode(self.scheme, klass)
            group = match.group(3).split("/")[0]
            if digits == 2:
                return ActivityCode(self.scheme, klass + subclass)
            return ActivityCode(self.scheme, klass + subclass + group)
        return ActivityCode(self.scheme, self.code[:digits])

    def __str__(self):
        if self.scheme in (IPC, CPC) and len(self.code) > 4:
            return f"{self.code[:4]} {self.code[4:]}"
        return self.code


def as_code(item, scheme):
    """Coerce a label or ActivityCode to an ActivityCode of ``scheme``."""
    if isinstance(item, ActivityCode):
        return item
    return ActivityCode.parse(item, scheme)


def label(item):
    """String label of an activity, whatever its representation."""
    return str(item)


EXACT = "exact"
PREFIX = "prefix"


@dataclass(frozen=True)
class GreenClassification:
    """Named list of green codes with their match mode.

    Parameters
    ----------
    name : str
        Label of the list, e.g. ``"cpc-y02-y04s"``.
    entries : tuple of (ActivityCode, str)
        Each code paired with ``"exact"`` or ``"prefix"``.
    """
    name: str
    entries: tuple

    def __post_init__(self):
        if not self.entries:
            raise DataError(f"green classification {self.name!r} has no entries")
        seen = set()
        for code, mode in self.entries:
            if mode not in (EXACT, PREFIX):
                raise DataError(f"unknown match mode {mode!r} in {self.name!r}")
            if (code, mode) in seen:
                raise DataError(f"duplicate entry {code}{'*' if mode == PREFIX else ''} in {self.name!r}")
            seen.add((code, mode))

    @property
    def schemes(self):
        return {code.scheme for code, _ in self.entries}

    def matches(self, activity):
        """Whether ``activity`` (an ActivityCode) is green under this list."""
        for code, mode in self.entries:
            if mode == EXACT and activity.code == code.code:
                return True
            if mode == PREFIX and _prefix_matches(activity, code):
                return True
        return False


def _prefix_matches(activity, prefix):
    if not activity.code.startswith(prefix.code):
        return False
    rest = activity.code[len(prefix.code):]
    # a main group prefix (B03C3) must not run into a longer group number (B03C30)
    if rest and prefix.scheme in (IPC, CPC) and prefix.digits == 3:
        return rest[0] == "/"
    return True
