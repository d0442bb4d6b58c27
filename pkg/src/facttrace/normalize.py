"""Unicode normalization applied before every string comparison.

All equality and containment tests in the toolkit go through NFC so that
encoding variants of the same visible text compare equal. Comparisons stay
case-sensitive and accent-sensitive; whitespace inside strings is preserved.
"""

import unicodedata


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)
