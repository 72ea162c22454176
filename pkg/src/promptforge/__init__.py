"""promptforge: a desk-scale lab for data-free distillation of a toy
vision-language teacher through prompt-diversified image synthesis."""

__version__ = "0.1.0"
