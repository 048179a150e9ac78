//! Symmetric quadrature rules on the reference triangle `(0,0), (1,0), (0,1)`.

/// Points are barycentric; weights sum to the reference area 1/2.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    /// One-point centroid rule, exact for degree 1.
    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![0.5],
            degree: 1,
        }
    }

    /// Edge-midpoint rule, exact for degree 2.
    pub fn edge_midpoints() -> Self {
        Self {
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 6.0; 3],
            degree: 2,
        }
    }

    /// Seven-point Radon rule, exact for degree 5.
    pub fn seven_point() -> Self {
        let s15 = 15f64.sqrt();
        let a1 = (6.0 - s15) / 21.0;
        let a2 = (6.0 + s15) / 21.0;
        let w1 = (155.0 - s15) / 1200.0;
        let w2 = (155.0 + s15) / 1200.0;
        let mut rule = Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![9.0 / 40.0],
            degree: 5,
        };
        rule.push_orbit3(a1, w1);
        rule.push_orbit3(a2, w2);
        rule.scale_weights(0.5);
        rule
    }

    /// Thirteen-point Dunavant rule, exact for degree 7 (one negative weight).
    pub fn thirteen_point() -> Self {
        let mut rule = Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![-0.149570044467682],
            degree: 7,
        };
        rule.push_orbit3(0.260345966079040, 0.175615257433208);
        rule.push_orbit3(0.065130102902216, 0.053347235608838);
        rule.push_orbit6(0.048690315425316, 0.312865496004874, 0.077113760890257);
        rule.scale_weights(0.5);
        rule
    }

    /// The cheapest available rule exact for `degree`, if any.
    pub fn for_degree(degree: usize) -> Option<Self> {
        match degree {
            0 | 1 => Some(Self::centroid()),
            2 => Some(Self::edge_midpoints()),
            3..=5 => Some(Self::seven_point()),
            6 | 7 => Some(Self::thirteen_point()),
            _ => None,
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `(barycentric point, weight)` pairs with weights scaled to a
    /// triangle of the given area.
    pub fn scaled_to(&self, area: f64) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        let s = 2.0 * area;
        self.points.iter().copied().zip(self.weights.iter().map(move |w| w * s))
    }

    fn push_orbit3(&mut self, a: f64, w: f64) {
        let b = 1.0 - 2.0 * a;
        for p in [[a, a, b], [a, b, a], [b, a, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn push_orbit6(&mut self, a: f64, b: f64, w: f64) {
        let c = 1.0 - a - b;
        for p in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
            self.points.push(p);
            self.weights.push(w);
        }
    }

    fn scale_weights(&mut self, s: f64) {
        self.weights.iter_mut().for_each(|w| *w *= s);
    }
}
