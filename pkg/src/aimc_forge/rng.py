"""Deterministic random number generation.

Everything random in this package flows from one documented generator so
that a corpus is reproducible bit-for-bit from its master seed, regardless
of worker count or platform.

Generator: xoshiro256** (Blackman/Vigna), state seeded from the SplitMix64
finalizer chain. Per-pulse seeds are derived by absorbing the four grid
fields (master seed, SNR index, class index, pulse index) through
SplitMix64 steps; per-purpose streams (parameter draws, chip draws, noise)
are split off a pulse seed with fixed tags so the streams never overlap.

Bulk Gaussian noise uses a lane-parallel xoshiro256** ensemble: LANES
independent streams are seeded from one SplitMix64 chain and stepped in
lockstep (numpy uint64 arithmetic). The output order is step-major, i.e.
outputs (step 0, lanes 0..L-1), (step 1, lanes 0..L-1), ... LANES is a
fixed constant; changing it would change every generated corpus.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15

# Stream tags: a pulse seed is split into non-overlapping purpose streams.
STREAM_PARAMS = 0x706172616D73A1
STREAM_CHIPS = 0x6368697073B2
STREAM_NOISE = 0x6E6F697365C3

# Lane count of the bulk-noise ensemble. Part of the output format.
LANES = 1024


def mix64(z):
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _mix64_vec(z):
    # numpy uint64 version of mix64
    z = z.astype(np.uint64, copy=True)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Minimal SplitMix64 stream, used only for seeding."""

    def __init__(self, seed):
        self.state = seed & MASK64

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK64
        return mix64(self.state)


def derive_pulse_seed(master_seed, snr_index, class_index, pulse_index):
    """Mix the four grid fields into one 64-bit per-pulse seed.

    Identical inputs give identical seeds; changing any field changes the
    seed. Collision-freeness over the default 13 x 33 x 1000 grid is
    checked exhaustively in the test suite.
    """
    h = mix64(master_seed)
    for field in (snr_index, class_index, pulse_index):
        h = (h + GOLDEN) & MASK64
        h = mix64(h ^ mix64((field & MASK64) ^ GOLDEN))
    return h


def derive_stream_seed(pulse_seed, stream_tag):
    """Split a per-purpose stream seed off a pulse seed."""
    return mix64((pulse_seed ^ stream_tag) + GOLDEN)


def _seed_state_words(seed, n_words):
    """First n_words outputs of SplitMix64(seed), vectorized (closed form)."""
    ks = np.arange(1, n_words + 1, dtype=np.uint64)
    return _mix64_vec(np.uint64(seed & MASK64) + ks * np.uint64(GOLDEN))


def _rotl(x, k):
    k = np.uint64(k)
    return (x << k) | (x >> (np.uint64(64) - k))


class Xoshiro256StarStar:
    """Scalar xoshiro256** stream for low-volume draws (pulse parameters,
    chip symbols). Pure-python integer arithmetic; deterministic."""

    def __init__(self, seed):
        sm = SplitMix64(seed)
        self.s = [sm.next_u64() for _ in range(4)]
        if not any(self.s):  # all-zero state is the one forbidden state
            self.s[0] = GOLDEN

    def next_u64(self):
        s0, s1, s2, s3 = self.s
        result = (self._rotl_py((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = self._rotl_py(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    @staticmethod
    def _rotl_py(x, k):
        return ((x << k) | (x >> (64 - k))) & MASK64

    def random(self):
        """Float64 uniform in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, low, high):
        return low + (high - low) * self.random()

    def randint(self, low, high):
        """Integer uniform on [low, high] inclusive.

        Uses rejection-free modulo reduction; the bias is < span/2**64 and
        irrelevant at the spans used here (< 100).
        """
        span = high - low + 1
        if span <= 0:
            raise ValueError("empty integer range")
        return low + self.next_u64() % span

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]


class LaneXoshiro:
    """Lane-parallel xoshiro256** ensemble for bulk draws.

    LANES independent streams stepped in lockstep; each step yields LANES
    uint64 values. Output stream is the step-major flattening.
    """

    def __init__(self, seed, lanes=LANES):
        words = _seed_state_words(seed, 4 * lanes).reshape(lanes, 4)
        self.s = [words[:, j].copy() for j in range(4)]
        self.lanes = lanes

    def next_block(self):
        s0, s1, s2, s3 = self.s
        result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uint64(self, n):
        steps = (n + self.lanes - 1) // self.lanes
        out = np.empty((steps, self.lanes), dtype=np.uint64)
        for i in range(steps):
            out[i] = self.next_block()
        return out.reshape(-1)[:n]

    def uniform01(self, n):
        """n float64 values in [0, 1)."""
        return (self.uint64(n) >> np.uint64(11)) * 2.0 ** -53


def gaussian_pairs(seed, n):
    """n independent standard-Gaussian pairs (g1, g2) via Box-Muller.

    Consecutive uniform pairs (u1, u2) are taken from the lane ensemble
    stream; g1 = r cos(2 pi u2), g2 = r sin(2 pi u2), r = sqrt(-2 ln u1)
    with u1 mapped into (0, 1].
    """
    lanes = LaneXoshiro(seed)
    u = lanes.uniform01(2 * n)
    u1 = 1.0 - u[0::2]  # (0, 1]: keeps log() finite
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    return r * np.cos(theta), r * np.sin(theta)
