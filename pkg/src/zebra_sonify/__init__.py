"""Auditory crossing guidance: sonification engine, deterministic simulator,
and an interactive audio bridge.

Subpackages and modules:

* :mod:`zebra_sonify.geometry` - world model, relative measures, heading fusion
* :mod:`zebra_sonify.guidance` - instruction machine and speech messages
* :mod:`zebra_sonify.synthesis` - additive synthesizer (compiled kernel + fallback)
* :mod:`zebra_sonify.sonification` - decision-to-sound mapping and scheduler
* :mod:`zebra_sonify.psychoacoustics` - adaptive staircase harness
* :mod:`zebra_sonify.simulator` - kinematics, recognizer model, sessions
* :mod:`zebra_sonify.audio_io` - WAV and fixed-size PCM blocks
* :mod:`zebra_sonify.bridge` - WebSocket session server for the browser UI
"""

__version__ = "0.1.0"
