from .gaussian import (
    DEFAULT_LOG_VARIANCE_BOUND,
    GaussianDiag,
    LatentSample,
    kl_divergence,
    latent_for_translation,
    monte_carlo_kl,
    reparameterize,
)
from .inferrer import (
    GaussianNetworkParameters,
    LatentProjectionParameters,
    posterior_params,
    prior_params,
    project_to_target,
)
