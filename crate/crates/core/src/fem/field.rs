use crate::geom::Point;

/// Nodal values of a scalar or vector finite element function.
///
/// Vector fields are stored component-major: component `c` of node `i` is
/// `values[c * len + i]`, matching the block layout of the tangential
/// gradient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    components: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn scalar(values: Vec<f64>) -> Self {
        Self { components: 1, values }
    }

    pub fn from_component_major(components: usize, values: Vec<f64>) -> Self {
        assert!(components > 0 && values.len() % components == 0, "ragged field");
        Self { components, values }
    }

    /// Pack the first `components` coordinates of each point.
    pub fn from_points(points: &[Point], components: usize) -> Self {
        let n = points.len();
        let mut values = vec![0.0; n * components];
        for (i, p) in points.iter().enumerate() {
            for c in 0..components {
                values[c * n + i] = p[c];
            }
        }
        Self { components, values }
    }

    pub fn to_points(&self) -> Vec<Point> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut p = [0.0; 3];
                for (c, pc) in p.iter_mut().enumerate().take(self.components) {
                    *pc = self.values[c * n + i];
                }
                p
            })
            .collect()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.values.len() / self.components
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_major_layout() {
        let f = NodalField::from_points(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], 2);
        assert_eq!(f.values(), &[1.0, 4.0, 2.0, 5.0]);
        assert_eq!(f.component(1), &[2.0, 5.0]);
        assert_eq!(f.to_points(), vec![[1.0, 2.0, 0.0], [4.0, 5.0, 0.0]]);
    }
}
