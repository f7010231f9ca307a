"""Date parsing and calendar-window helpers.

Accepted input formats, tried in order:

    2024-03-15      ISO
    2024/03/15
    03/15/2024      month first
    15-Mar-2024     abbreviated or full month name, any case

Week windows follow ISO-8601: Monday through Sunday.
"""

from __future__ import annotations

import datetime as dt
import re

_MONTHS = {
    "jan": 1, "feb": 2, "mar": 3, "apr": 4, "may": 5, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "oct": 10, "nov": 11, "dec": 12,
}

_ISO_RE = re.compile(r"^(\d{4})-(\d{1,2})-(\d{1,2})$")
_SLASH_YMD_RE = re.compile(r"^(\d{4})/(\d{1,2})/(\d{1,2})$")
_SLASH_MDY_RE = re.compile(r"^(\d{1,2})/(\d{1,2})/(\d{4})$")
_NAMED_RE = re.compile(r"^(\d{1,2})-([A-Za-z]{3,9})-(\d{4})$")

# Reference date for seeded work: synthetic tables are sampled around it and
# ranker training evaluates calendar windows against it, so "this month" means
# the same rows at training time as at benchmark time.
ANCHOR_TODAY = dt.date(2024, 3, 15)


def parse_date(text: str) -> dt.date | None:
    """Parse a cell's raw text as a date, or return None."""
    s = text.strip()
    if not s:
        return None
    m = _ISO_RE.match(s)
    if m:
        return _make_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = _SLASH_YMD_RE.match(s)
    if m:
        return _make_date(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    m = _SLASH_MDY_RE.match(s)
    if m:
        return _make_date(int(m.group(3)), int(m.group(1)), int(m.group(2)))
    m = _NAMED_RE.match(s)
    if m:
        month = _MONTHS.get(m.group(2)[:3].lower())
        if month is None:
            return None
        return _make_date(int(m.group(3)), month, int(m.group(1)))
    return None


def _make_date(year: int, month: int, day: int) -> dt.date | None:
    try:
        return dt.date(year, month, day)
    except ValueError:
        return None


def week_bounds(day: dt.date) -> tuple[dt.date, dt.date]:
    """Inclusive Monday..Sunday bounds of the ISO week containing `day`."""
    start = day - dt.timedelta(days=day.weekday())
    return start, start + dt.timedelta(days=6)


def month_bounds(day: dt.date) -> tuple[dt.date, dt.date]:
    """Inclusive first..last day of the month containing `day`."""
    start = day.replace(day=1)
    if start.month == 12:
        nxt = start.replace(year=start.year + 1, month=1)
    else:
        nxt = start.replace(month=start.month + 1)
    return start, nxt - dt.timedelta(days=1)


def shift_week(day: dt.date, offset: int) -> dt.date:
    return day + dt.timedelta(weeks=offset)


def shift_month(day: dt.date, offset: int) -> dt.date:
    """A day inside the month `offset` months away (day clamped to 1)."""
    month_index = day.year * 12 + (day.month - 1) + offset
    return dt.date(month_index // 12, month_index % 12 + 1, 1)
