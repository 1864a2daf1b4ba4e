"""knav: organize broad scientific-literature searches into a navigable,
named two-level hierarchy of subtopics, with iterative expansion."""

__version__ = "0.1.0"
