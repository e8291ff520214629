# Regenerates reference_level0.flac / reference.pcm with libsndfile (pip install soundfile).
import numpy as np
import soundfile as sf

rng = np.random.default_rng(7)
n = 20000
t = np.arange(n) / 48000.0
x = 9000 * np.sin(2 * np.pi * (200 + 3000 * t) * t) + rng.normal(0, 300, n)
pcm = np.clip(np.round(x), -32768, 32767).astype("<i2")
pcm.tofile("reference.pcm")
sf.write("reference_level0.flac", pcm, 48000, format="FLAC", subtype="PCM_16", compression_level=0.0)
