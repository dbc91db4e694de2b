"""
Zero-shot classification walkthrough
====================================

Shows the hypothesis templating, the per-label entailment scoring, and the
softmax that turns entailment logits into a document distribution. Then
runs the whole pipeline (preprocess -> detect -> recognize -> classify) on
a synthetic image through the deterministic stub backends.
"""

import numpy as np

from docpipe import classify_document
from docpipe.backends import BackendDescriptor, StubNli, build_backends
from docpipe.classify import build_hypothesis, zero_shot_classify

# every label becomes one hypothesis for the NLI scorer
labels = ["Invoice", "Report", "Letter", "Form"]
for label in labels:
    print(build_hypothesis(label))

# the stub scorer is a keyword lexicon: "invoice" in the premise entails
# the Invoice hypothesis with logit 4.0
scorer = StubNli()
premise = "invoice no. 1138 total due 42.00 please remit payment"
result = zero_shot_classify(premise, labels, scorer)
print(f"\npremise: {premise!r}")
for label, p in result.label_probs.items():
    marker = " <-- chosen" if label == result.chosen else ""
    print(f"  {label:<8} {p:.3f}{marker}")

# full pipeline on a synthetic image: the stub detector plants one region,
# the stub recognizer returns the text for it, and the classifier runs on
# the aggregate
descriptors = {
    "detector": BackendDescriptor(kind="detector", options={"rects": [(30, 40, 120, 24)]}),
    "recognizer": BackendDescriptor(
        kind="recognizer",
        options={"entries": [((30, 40, 120, 24), "annual report fiscal year summary")]},
    ),
}
backends = build_backends(descriptors)
image = np.random.default_rng(3).integers(140, 250, (60, 90, 3), dtype=np.uint8)
outcome = classify_document(image, backends, labels=labels, summarize=True)
print(f"\nfull pipeline chose: {outcome.classification.chosen}")
print(f"regions for display: {len(outcome.regions)}")
print(f"summary: {outcome.classification.summary!r}")
print("stage timings (ms):", {k: round(v, 1) for k, v in outcome.timings_ms.items()})
