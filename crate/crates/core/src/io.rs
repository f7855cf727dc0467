//! Artifact writers. Every file goes to a temporary sibling first and is
//! renamed into place, so readers never observe a partial file.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::linalg::DenseMatrix;

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn labels_csv(labels: &[usize]) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{i},{l}");
    }
    out
}

pub fn trace_csv(objective: &[f64], gap: &[f64]) -> String {
    let mut out = String::from("iter,objective,gap\n");
    for (k, (o, g)) in objective.iter().zip(gap).enumerate() {
        let _ = writeln!(out, "{k},{o:?},{g:?}");
    }
    out
}

pub fn colsum_csv(column_sums: &[f64], b_l: f64, b_u: f64) -> String {
    let mut out = String::from("cluster,column_sum,lower,upper\n");
    for (j, s) in column_sums.iter().enumerate() {
        let _ = writeln!(out, "{j},{s:?},{b_l:?},{b_u:?}");
    }
    out
}

pub fn plan_csv(f: &DenseMatrix) -> String {
    let header: Vec<String> = (0..f.cols()).map(|j| format!("c{j}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..f.rows() {
        let row: Vec<String> = f.row(i).iter().map(|x| format!("{x:?}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn csv_layouts() {
        assert_eq!(labels_csv(&[1, 0]), "index,label\n0,1\n1,0\n");
        assert_eq!(trace_csv(&[-1.5], &[0.25]), "iter,objective,gap\n0,-1.5,0.25\n");
        assert_eq!(colsum_csv(&[2.0], 1.0, 3.0), "cluster,column_sum,lower,upper\n0,2.0,1.0,3.0\n");
        let f = DenseMatrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert_eq!(plan_csv(&f), "c0,c1\n0.5,0.5\n");
    }
}
