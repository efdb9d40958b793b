"""kls-figures: plot curve CSVs and comparison summaries emitted by the kls CLI."""

__version__ = "0.1.0"
