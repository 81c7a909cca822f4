//! Two-coordinate projections of the rotation-set cloud.

use std::fs;
use std::path::{Path, PathBuf};

use rotorbit_core::rotation::convex_hull_2d;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error("coordinate {index} out of range 1..={rank}")]
    BadCoordinate { index: usize, rank: usize },
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for ProjectError {
    fn from(e: csv::Error) -> Self {
        ProjectError::Malformed(e.to_string())
    }
}

/// Reads `mz_cloud.csv` from `dir`: the cloud rows and their coordinate count.
pub fn read_cloud(dir: &Path) -> Result<Vec<Vec<f64>>, ProjectError> {
    let path = dir.join("mz_cloud.csv");
    if !path.is_file() {
        return Err(ProjectError::MissingArtifact(path));
    }
    let mut r = csv::Reader::from_path(&path)?;
    let rank = r.headers()?.iter().filter(|h| h.starts_with('x')).count();
    let mut cloud = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let p = (0..rank)
            .map(|k| {
                rec.get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| ProjectError::Malformed(format!("row {}", cloud.len() + 1)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        cloud.push(p);
    }
    Ok(cloud)
}

/// Distinct projected points, sorted, each flagged when it is a vertex of
/// the planar hull.
pub fn projection(cloud: &[Vec<f64>], i: usize, j: usize) -> Result<Vec<([f64; 2], bool)>, ProjectError> {
    let rank = cloud.first().map_or(0, Vec::len);
    for index in [i, j] {
        if index == 0 || index > rank {
            return Err(ProjectError::BadCoordinate { index, rank });
        }
    }
    let flat: Vec<Vec<f64>> = cloud.iter().map(|p| vec![p[i - 1], p[j - 1]]).collect();
    let hull = convex_hull_2d(&flat);
    let mut pts: Vec<[f64; 2]> = flat.iter().map(|p| [p[0], p[1]]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup();
    Ok(pts.into_iter().map(|p| (p, hull.contains(&p))).collect())
}

/// Writes `<dir>/projection_<i>_<j>.csv`; indices are 1-based.
pub fn project(dir: &Path, i: usize, j: usize) -> Result<PathBuf, ProjectError> {
    let cloud = read_cloud(dir)?;
    let rows = projection(&cloud, i, j)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([format!("x{i}"), format!("x{j}"), "hull_vertex".into()])?;
    for (p, h) in rows {
        w.write_record([p[0].to_string(), p[1].to_string(), u8::from(h).to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| ProjectError::Malformed(e.to_string()))?;
    let out = dir.join(format!("projection_{i}_{j}.csv"));
    fs::write(&out, bytes)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point() {
        let rows = projection(&[vec![0.0, 0.0], vec![0.0, 0.0]], 1, 2).unwrap();
        assert_eq!(rows, vec![([0.0, 0.0], true)]);
    }

    #[test]
    fn segment_is_collinear() {
        let cloud: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64 / 4.0, 0.0, 1.0]).collect();
        let rows = projection(&cloud, 1, 2).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|(p, _)| p[1] == 0.0));
        let flagged: Vec<_> = rows.iter().filter(|r| r.1).map(|r| r.0).collect();
        assert_eq!(flagged, vec![[0.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn interior_points_unflagged() {
        let cloud = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.2, 0.2]];
        let rows = projection(&cloud, 1, 2).unwrap();
        assert_eq!(rows.iter().filter(|r| r.1).count(), 3);
        assert!(!rows.iter().find(|r| r.0 == [0.2, 0.2]).unwrap().1);
    }

    #[test]
    fn bad_index() {
        assert!(matches!(
            projection(&[vec![0.0, 0.0]], 0, 2),
            Err(ProjectError::BadCoordinate { index: 0, .. })
        ));
        assert!(matches!(
            projection(&[vec![0.0, 0.0]], 1, 3),
            Err(ProjectError::BadCoordinate { index: 3, .. })
        ));
    }
}
