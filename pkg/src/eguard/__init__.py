"""Streaming lower bounds on the number of true discoveries from e-values.

The package maintains, over a growing stream of hypotheses with attached
e-values, a simultaneous high-probability lower bound on the number of
false nulls ("true discoveries") inside an adaptively chosen query set.
Three streaming engines cover sequential, exchangeable, and arbitrarily
dependent e-values; a brute-force closed-testing oracle provides exact
reference bounds for verification and what-if subset queries.
"""

from __future__ import annotations

__version__ = "0.1.0"
