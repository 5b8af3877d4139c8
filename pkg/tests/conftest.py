import os

from hypothesis import HealthCheck, settings

# Exact-arithmetic oracles make individual examples slow; wall-clock limits
# belong to CI, not to the shrinker.
settings.register_profile(
    "ballotaudit",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
    max_examples=int(os.environ.get("BALLOTAUDIT_TEST_EXAMPLES", "50")),
)
settings.load_profile("ballotaudit")
