//! Dense indexing of the forward light cone, slices `1..=t_max`.

use crate::path::Site;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LightCone {
    t_max: usize,
}

impl LightCone {
    pub fn new(t_max: usize) -> LightCone {
        LightCone { t_max }
    }

    pub fn t_max(self) -> usize {
        self.t_max
    }

    /// Number of sites in slices `1..=t_max`.
    pub fn len(self) -> usize {
        Self::slice_offset(self.t_max + 1)
    }

    pub fn is_empty(self) -> bool {
        self.t_max == 0
    }

    #[inline]
    fn slice_offset(t: usize) -> usize {
        // slice s holds s + 1 sites
        (t - 1) * (t + 2) / 2
    }

    /// Flat index of `site`, or `None` outside the cone or the stored slices.
    #[inline]
    pub fn index(self, site: Site) -> Option<usize> {
        let Site { x, t } = site;
        if t < 1 || t as usize > self.t_max || x.abs() > t || (x + t) % 2 != 0 {
            return None;
        }
        Some(Self::slice_offset(t as usize) + ((x + t) / 2) as usize)
    }

    /// Index without bounds checks beyond a debug assertion.
    #[inline]
    pub(crate) fn index_unchecked(self, x: i64, t: i64) -> usize {
        debug_assert!(self.index(Site::new(x, t)).is_some(), "({x},{t}) outside cone");
        Self::slice_offset(t as usize) + ((x + t) / 2) as usize
    }

    /// Sites of slice `t` ordered by increasing `x`.
    pub fn slice(t: usize) -> impl Iterator<Item = Site> {
        let t = t as i64;
        (0..=t).map(move |k| Site::new(2 * k - t, t))
    }

    /// Every stored site, ordered by `(t, x)`.
    pub fn sites(self) -> impl Iterator<Item = Site> {
        (1..=self.t_max).flat_map(Self::slice)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_are_dense_and_ordered() {
        let cone = LightCone::new(7);
        let idx: Vec<usize> = cone.sites().map(|s| cone.index(s).unwrap()).collect();
        assert_eq!(idx, (0..cone.len()).collect::<Vec<_>>());
    }

    #[test]
    fn outside_is_none() {
        let cone = LightCone::new(3);
        assert_eq!(cone.index(Site::new(0, 0)), None);
        assert_eq!(cone.index(Site::new(0, 1)), None);
        assert_eq!(cone.index(Site::new(5, 3)), None);
        assert_eq!(cone.index(Site::new(0, 4)), None);
        assert_eq!(cone.index(Site::new(-3, 3)), Some(5));
    }
}
