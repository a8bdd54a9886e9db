"""Energy-aware VoD content placement across core, metro and access tiers."""
