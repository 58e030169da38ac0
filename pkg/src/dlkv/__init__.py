"""Dynamic logic of group knowledge of hypothetical values."""
from .core import *  # noqa: F401,F403
from .syntax import ParseError, parse_event, parse_expr, parse_formula, parse_model, parse_term, print_expr

__version__ = "0.1.0"
