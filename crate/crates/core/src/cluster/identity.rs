use serde::{Deserialize, Serialize};

use super::{enumerate_clusters, estimate_activities_shared, z_cluster_sum, z_standard_error, ActivityBatch, ActivityModel, Polymer};
use crate::error::{Error, Result};
use crate::gibbs::{sample_mu_t, Estimate, GibbsSpec, Reference};
use crate::rng::RngStream;

/// Cluster-sum partition function against a direct weighted estimate under
/// the same product reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZIdentityReport {
    pub n_clusters: usize,
    pub cluster_sum: Estimate,
    pub direct: Estimate,
    pub truncated: bool,
}

impl ZIdentityReport {
    pub fn pooled_se(&self) -> f64 {
        self.cluster_sum.se.hypot(self.direct.se)
    }

    pub fn z_score(&self) -> f64 {
        (self.cluster_sum.value - self.direct.value) / self.pooled_se()
    }

    pub fn agrees(&self, k_se: f64) -> bool {
        !self.truncated && (self.cluster_sum.value - self.direct.value).abs() <= k_se * self.pooled_se()
    }
}

/// Direct-sampling spec whose reference is the product measure of `model`.
pub fn direct_spec(model: &ActivityModel) -> Result<GibbsSpec> {
    let n = model.partition.n;
    if !n.is_power_of_two() {
        return Err(Error::spec(format!("direct estimate needs a power-of-two number of intervals, got {n}")));
    }
    Ok(GibbsSpec {
        half_window: model.partition.half_window,
        level: n.trailing_zeros() + model.level,
        dim: model.dim(),
        ext: model.ext.clone(),
        w: model.w.clone(),
        lambda: model.lambda,
        reference: Reference::ChiProduct { n },
    })
}

/// Polymer-gas partition function over every cluster up to a weight.
#[derive(Clone, Debug)]
pub struct ClusterSum {
    pub z: Estimate,
    pub truncated: bool,
    pub batch: ActivityBatch,
}

/// Enumerates clusters up to `max_weight`, estimates their activities from
/// `n` shared samples and sums the polymer gas.
pub fn cluster_sum_estimate(model: &ActivityModel, max_weight: usize, n: usize, stream: RngStream) -> Result<ClusterSum> {
    model.validate()?;
    let clusters = enumerate_clusters(&model.partition, max_weight)?;
    let batch = estimate_activities_shared(&clusters, model, n, stream)?;
    let polys = Polymer::for_clusters(&clusters, &batch.estimates)?;
    let zc = z_cluster_sum(&polys, None);
    let se = z_standard_error(&polys, &batch.covariance)?;
    Ok(ClusterSum { z: Estimate { value: zc.value, se }, truncated: zc.truncated, batch })
}

/// Compares [`cluster_sum_estimate`] with `n_direct` direct draws under the
/// product reference. Substreams 0 and 1 of `stream` are used.
pub fn z_identity_check(model: &ActivityModel, max_weight: usize, n_activity: usize, n_direct: usize, stream: RngStream) -> Result<(ZIdentityReport, ActivityBatch)> {
    let spec = direct_spec(model)?;
    let cs = cluster_sum_estimate(model, max_weight, n_activity, stream.substream(0))?;
    let direct = sample_mu_t(&spec, n_direct, stream.substream(1))?.z_hat();
    let report = ZIdentityReport { n_clusters: cs.batch.estimates.len(), cluster_sum: cs.z, direct, truncated: cs.truncated };
    Ok((report, cs.batch))
}
