//! Convex minorants and concave majorants of sampled flux graphs.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HullKind {
    /// Greatest convex minorant (lower hull).
    Convex,
    /// Least concave majorant (upper hull).
    Concave,
}

/// One linear piece of a hull.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullEdge {
    pub left: (f64, f64),
    pub right: (f64, f64),
    pub slope: f64,
    /// Number of samples strictly between the two vertices.
    pub skipped: usize,
    /// Largest gap between the flux samples and the chord over the edge.
    pub deviation: f64,
}

/// A piecewise-linear hull over a sorted sample set, built by a single
/// monotone-chain sweep.
#[derive(Clone, Debug)]
pub struct Hull {
    kind: HullKind,
    samples: Vec<(f64, f64)>,
    vertices: Vec<usize>,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl Hull {
    /// `samples` must be sorted by abscissa.
    pub fn build(samples: Vec<(f64, f64)>, kind: HullKind) -> Self {
        assert!(!samples.is_empty(), "hull needs at least one sample");
        let mut vertices: Vec<usize> = Vec::with_capacity(64);
        for (i, &p) in samples.iter().enumerate() {
            while vertices.len() >= 2 {
                let o = samples[vertices[vertices.len() - 2]];
                let a = samples[vertices[vertices.len() - 1]];
                let c = cross(o, a, p);
                let pop = match kind {
                    HullKind::Convex => c <= 0.0,
                    HullKind::Concave => c >= 0.0,
                };
                if pop {
                    vertices.pop();
                } else {
                    break;
                }
            }
            vertices.push(i);
        }
        Self { kind, samples, vertices }
    }

    pub fn kind(&self) -> HullKind {
        self.kind
    }

    pub fn lo(&self) -> f64 {
        self.samples[0].0
    }

    pub fn hi(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.vertices.iter().map(move |&i| self.samples[i])
    }

    pub fn edges(&self) -> Vec<HullEdge> {
        self.vertices
            .windows(2)
            .map(|w| {
                let (l, r) = (self.samples[w[0]], self.samples[w[1]]);
                let slope = (r.1 - l.1) / (r.0 - l.0);
                let deviation = self.samples[w[0] + 1..w[1]]
                    .iter()
                    .map(|&(u, v)| (l.1 + slope * (u - l.0) - v).abs())
                    .fold(0.0, f64::max);
                HullEdge { left: l, right: r, slope, skipped: w[1] - w[0] - 1, deviation }
            })
            .collect()
    }

    /// Hull value at `u`, clamped to the hull's interval.
    pub fn eval(&self, u: f64) -> f64 {
        let u = u.clamp(self.lo(), self.hi());
        let k = self.vertices.partition_point(|&i| self.samples[i].0 <= u);
        if k == 0 {
            return self.samples[self.vertices[0]].1;
        }
        if k >= self.vertices.len() {
            return self.samples[*self.vertices.last().expect("nonempty")].1;
        }
        let (l, r) = (self.samples[self.vertices[k - 1]], self.samples[self.vertices[k]]);
        l.1 + (r.1 - l.1) * (u - l.0) / (r.0 - l.0)
    }
}
