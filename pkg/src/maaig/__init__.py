"""maaig: motion-to-instruction toolkit.

Skeleton clip handling, synthetic motion/text corpora, a motion-conditioned
encoder-decoder with two-stage training, machine-translation metrics, and a
local annotation service with its command line front door.
"""

__version__ = "0.1.0"
