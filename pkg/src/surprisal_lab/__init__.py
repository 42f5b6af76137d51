"""Four notions of word surprisal (word n-gram, POS n-gram, lexical and
syntactic PCFG surprisal) and the statistics/classification pipeline that
compares them on homophonous-phrase stimuli."""

from .errors import FormatError, GrammarError, ParseError, SurprisalLabError

__version__ = "0.1.0"

__all__ = ["FormatError", "GrammarError", "ParseError", "SurprisalLabError", "__version__"]
