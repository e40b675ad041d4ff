"""UTC instants as integer nanoseconds since the Unix epoch.

Integer nanoseconds avoid the precision loss of float epoch seconds
(a 2003 timestamp in ns exceeds the 53-bit exact range of a double).
"""

import calendar
import datetime
import re

NS_PER_S = 1_000_000_000

_RFC3339 = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[Tt ]"
    r"(\d{2}):(\d{2}):(\d{2})(\.\d+)?"
    r"(?:[Zz]|\+00:00)$"
)


def parse_utc(text: str) -> int:
    """Parse an RFC3339 UTC timestamp ('2002-12-05T06:55:00Z') to ns."""
    m = _RFC3339.match(text.strip())
    if m is None:
        raise ValueError(f"not an RFC3339 UTC timestamp: {text!r}")
    y, mo, d, h, mi, s = (int(g) for g in m.groups()[:6])
    try:
        dt = datetime.datetime(y, mo, d, h, mi, s)
    except ValueError as exc:
        raise ValueError(f"invalid timestamp {text!r}: {exc}") from None
    ns = calendar.timegm(dt.utctimetuple()) * NS_PER_S
    frac = m.group(7)
    if frac:
        digits = frac[1:][:9].ljust(9, "0")
        ns += int(digits)
    return ns


def format_utc(ns: int) -> str:
    """Format ns since epoch as RFC3339 UTC, trimming trailing zeros."""
    secs, rem = divmod(int(ns), NS_PER_S)
    dt = datetime.datetime(1970, 1, 1) + datetime.timedelta(seconds=secs)
    out = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if rem:
        out += (".%09d" % rem).rstrip("0")
    return out + "Z"
