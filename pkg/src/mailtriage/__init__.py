"""Mail triage: shallow text processing plus ranked statistical classification.

Modules by responsibility:

    corpus     file-backed document store, category registry, ingestion
    stp        tokenizer, sentence heuristics, extraction modes
    features   relevancy vector (per-category top-k TF/IDF) and vectorizing
    learners   five classifier families behind one fit/predict contract
    evaluate   stratified cross-validation grid, reports
    synth      seeded synthetic corpus generator
    service    HTTP agent-assist service with atomic relearning
    cli        command-line entry point
"""

__version__ = "0.1.0"
