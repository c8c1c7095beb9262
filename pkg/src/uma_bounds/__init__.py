"""Finite-blocklength achievability bounds for unsourced multiple access
with a random, unknown number of active users on the Gaussian MAC.

Submodules:
    specfun    -- numerically stable special functions
    activity   -- activity models, truncation windows, change-of-measure penalty
    estimator  -- estimation-confusion bound xi for ML / energy estimators
    exponent   -- error-exponent branch: index sets, E(t,t'), p-terms
    dt_mc      -- Monte-Carlo information-density branch: q-terms
    bound_core -- main bound assembly, zero-radius special case, error floors
    tin        -- treat-interference-as-noise RCUs bound
    sa_mpr     -- slotted ALOHA with multi-packet reception wrapper
    search     -- required-Eb/N0 search and parameter optimization
    cli        -- command-line front end
"""

__version__ = "0.1.0"
