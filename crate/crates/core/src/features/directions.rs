/// Neighbourhood geometry used by the texture matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    /// 4 in-plane directions, 8-neighbourhood.
    Planar,
    /// 13 directions, 26-neighbourhood.
    Volumetric,
}

pub const PLANAR_DIRECTIONS: [[isize; 3]; 4] = [[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, -1, 0]];

pub const VOLUMETRIC_DIRECTIONS: [[isize; 3]; 13] = [
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [1, -1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, 1],
    [1, 1, 1],
    [1, -1, 1],
    [-1, 1, 1],
    [-1, -1, 1],
];

impl Connectivity {
    /// Unique unit offsets (one of each +/- pair).
    pub fn directions(self) -> &'static [[isize; 3]] {
        match self {
            Connectivity::Planar => &PLANAR_DIRECTIONS,
            Connectivity::Volumetric => &VOLUMETRIC_DIRECTIONS,
        }
    }

    /// Full neighbourhood: every direction and its negation.
    pub fn neighbours(self) -> Vec<[isize; 3]> {
        self.directions()
            .iter()
            .flat_map(|d| [*d, [-d[0], -d[1], -d[2]]])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn neighbourhood_sizes() {
        let n3: HashSet<_> = Connectivity::Volumetric.neighbours().into_iter().collect();
        assert_eq!(n3.len(), 26);
        assert!(!n3.contains(&[0, 0, 0]));
        let n2: HashSet<_> = Connectivity::Planar.neighbours().into_iter().collect();
        assert_eq!(n2.len(), 8);
        assert!(n2.iter().all(|d| d[2] == 0));
    }
}
