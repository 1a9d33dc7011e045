"""Published per-subject accuracies (%) on BCI Competition IV 2a, used for comparison tables."""

METHODS = ("mCSP", "ComplexCSP", "proposed-SVM", "proposed-SRIT2NFIS")

SUBJECT_ACCURACY = {
    "mCSP": (48.1, 27.3, 70.6, 21.4, 22.7, 32.4, 52.3, 65.8, 34.2),
    "ComplexCSP": (61.5, 32.1, 68.6, 27.1, 34.3, 35.3, 48.0, 65.6, 41.8),
    "proposed-SVM": (68.75, 41.67, 66.31, 37.98, 25.0, 36.62, 52.97, 65.55, 64.58),
    "proposed-SRIT2NFIS": (74.65, 45.48, 74.31, 39.58, 32.99, 37.9, 54.17, 66.32, 66.31),
}

# as printed; the ComplexCSP mean does not match its own column to 0.01
REPORTED_MEAN = {"mCSP": 41.64, "ComplexCSP": 46.01, "proposed-SVM": 51.04, "proposed-SRIT2NFIS": 54.63}
REPORTED_SD = {"mCSP": 18.34, "ComplexCSP": 15.65, "proposed-SVM": 16.15, "proposed-SRIT2NFIS": 16.27}

N_SUBJECTS = 9


def subject_reference(subject) -> dict | None:
    """Per-method accuracy for subject 1..9, or None for other ids."""
    try:
        s = int(subject)
    except (TypeError, ValueError):
        return None
    if not 1 <= s <= N_SUBJECTS:
        return None
    return {m: SUBJECT_ACCURACY[m][s - 1] for m in METHODS}
