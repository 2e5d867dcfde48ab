//! TU Dortmund flat-file datasets (`<name>_A.txt`, `<name>_graph_indicator.txt`, ...).

use super::{Dataset, Graph, GraphError};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

struct Lines {
    file: String,
    lines: Vec<(usize, String)>,
}

fn read_lines(dir: &Path, file: &str, required: bool) -> Result<Option<Lines>, GraphError> {
    let path = dir.join(file);
    if !path.exists() {
        return if required { Err(GraphError::MissingFile(path.display().to_string())) } else { Ok(None) };
    }
    let text =
        fs::read_to_string(&path).map_err(|source| GraphError::Io { path: path.display().to_string(), source })?;
    let lines =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim().to_string())).filter(|(_, l)| !l.is_empty()).collect();
    Ok(Some(Lines { file: file.to_string(), lines }))
}

fn parse_int(lines: &Lines, line: usize, s: &str) -> Result<i64, GraphError> {
    s.trim().parse().map_err(|_| GraphError::Format {
        file: lines.file.clone(),
        line,
        msg: format!("expected an integer, found `{}`", s.trim()),
    })
}

/// Maps arbitrary integer labels onto `0..k` in ascending order.
fn remap(values: &[i64]) -> Vec<usize> {
    let distinct: Vec<i64> = values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    values.iter().map(|v| distinct.binary_search(v).expect("present")).collect()
}

/// Reads the dataset `name` from `dir`. Directed duplicate rows collapse into
/// one undirected edge and self-loop rows are dropped.
pub fn parse_tu_dataset(dir: &Path, name: &str) -> Result<Dataset, GraphError> {
    let a = read_lines(dir, &format!("{name}_A.txt"), true)?.expect("required");
    let ind = read_lines(dir, &format!("{name}_graph_indicator.txt"), true)?.expect("required");
    let gl = read_lines(dir, &format!("{name}_graph_labels.txt"), true)?.expect("required");
    let nl = read_lines(dir, &format!("{name}_node_labels.txt"), false)?;

    // graph id and local index of every (1-based) node
    let mut node_graph = Vec::with_capacity(ind.lines.len());
    for (line, s) in &ind.lines {
        let gid = parse_int(&ind, *line, s)?;
        if gid < 1 {
            return Err(GraphError::Format { file: ind.file.clone(), line: *line, msg: format!("graph id {gid} < 1") });
        }
        node_graph.push(gid as usize - 1);
    }
    let graph_count = gl.lines.len();
    if let Some(&max) = node_graph.iter().max() {
        if max >= graph_count {
            return Err(GraphError::Format {
                file: ind.file.clone(),
                line: node_graph.iter().position(|&g| g == max).unwrap() + 1,
                msg: format!("graph id {} but only {graph_count} graph labels", max + 1),
            });
        }
    }
    let mut sizes = vec![0usize; graph_count];
    let mut local = Vec::with_capacity(node_graph.len());
    for &g in &node_graph {
        local.push(sizes[g]);
        sizes[g] += 1;
    }

    let mut edges = vec![Vec::new(); graph_count];
    for (line, s) in &a.lines {
        let mut parts = s.split(',');
        let (Some(us), Some(vs), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(GraphError::Format { file: a.file.clone(), line: *line, msg: "expected `u, v`".into() });
        };
        let (u, v) = (parse_int(&a, *line, us)?, parse_int(&a, *line, vs)?);
        for x in [u, v] {
            if x < 1 || x as usize > node_graph.len() {
                return Err(GraphError::Format {
                    file: a.file.clone(),
                    line: *line,
                    msg: format!("dangling node index {x} (dataset has {} nodes)", node_graph.len()),
                });
            }
        }
        let (u, v) = (u as usize - 1, v as usize - 1);
        if node_graph[u] != node_graph[v] {
            return Err(GraphError::Format {
                file: a.file.clone(),
                line: *line,
                msg: format!("edge joins graphs {} and {}", node_graph[u] + 1, node_graph[v] + 1),
            });
        }
        if u != v {
            edges[node_graph[u]].push((local[u], local[v]));
        }
    }

    let raw_graph_labels = gl.lines.iter().map(|(line, s)| parse_int(&gl, *line, s)).collect::<Result<Vec<_>, _>>()?;
    let labels = remap(&raw_graph_labels);

    let node_labels = match &nl {
        Some(nl) => {
            if nl.lines.len() != node_graph.len() {
                return Err(GraphError::Format {
                    file: nl.file.clone(),
                    line: nl.lines.len(),
                    msg: format!("{} node labels for {} nodes", nl.lines.len(), node_graph.len()),
                });
            }
            let raw = nl.lines.iter().map(|(line, s)| parse_int(nl, *line, s)).collect::<Result<Vec<_>, _>>()?;
            Some(remap(&raw))
        }
        None => None,
    };

    let mut per_graph_labels: Vec<Vec<u32>> = sizes.iter().map(|&s| Vec::with_capacity(s)).collect();
    if let Some(nl) = &node_labels {
        for (node, &l) in nl.iter().enumerate() {
            per_graph_labels[node_graph[node]].push(l as u32);
        }
    }

    let mut graphs = Vec::with_capacity(graph_count);
    for (gid, e) in edges.into_iter().enumerate() {
        let mut g = Graph::new(sizes[gid], e)?;
        if node_labels.is_some() {
            g = g.with_labels(std::mem::take(&mut per_graph_labels[gid]))?;
        }
        graphs.push(g);
    }
    Ok(Dataset::new(name, graphs, labels))
}

/// Writes `ds` in TU format (both directions of every edge, 1-based ids).
pub fn write_tu_dataset(ds: &Dataset, dir: &Path) -> Result<(), GraphError> {
    let io = |path: &Path| {
        let p = path.display().to_string();
        move |source| GraphError::Io { path: p, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut a = String::new();
    let mut ind = String::new();
    let mut gl = String::new();
    let mut nl = String::new();
    let labeled = ds.graphs.iter().all(|g| g.node_labels().is_some());
    let mut offset = 0;
    for (gid, (g, &label)) in ds.graphs.iter().zip(&ds.labels).enumerate() {
        for v in 0..g.node_count() {
            for &u in g.neighbors(v) {
                writeln!(a, "{}, {}", v + offset + 1, u + offset + 1).unwrap();
            }
            writeln!(ind, "{}", gid + 1).unwrap();
        }
        if labeled {
            for &l in g.node_labels().unwrap_or(&[]) {
                writeln!(nl, "{l}").unwrap();
            }
        }
        writeln!(gl, "{label}").unwrap();
        offset += g.node_count();
    }
    let name = &ds.name;
    let mut files = vec![
        (format!("{name}_A.txt"), a),
        (format!("{name}_graph_indicator.txt"), ind),
        (format!("{name}_graph_labels.txt"), gl),
    ];
    if labeled && !ds.graphs.is_empty() {
        files.push((format!("{name}_node_labels.txt"), nl));
    }
    for (file, body) in files {
        let path = dir.join(file);
        fs::write(&path, body).map_err(io(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn collapses_directed_rows() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n");
        write(dir.path(), "T_graph_indicator.txt", "1\n1\n1\n");
        write(dir.path(), "T_graph_labels.txt", "-1\n");
        let ds = parse_tu_dataset(dir.path(), "T").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.graphs[0].node_count(), 3);
        assert_eq!(ds.graphs[0].edge_count(), 2);
        assert_eq!(ds.labels, vec![0]);
        assert!(ds.graphs[0].node_labels().is_none());
    }

    #[test]
    fn labels_are_remapped_and_graphs_split() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T_A.txt", "1,2\n2,1\n3,4\n4,3\n");
        write(dir.path(), "T_graph_indicator.txt", "1\n1\n2\n2\n");
        write(dir.path(), "T_graph_labels.txt", "1\n-1\n");
        write(dir.path(), "T_node_labels.txt", "5\n7\n7\n9\n");
        let ds = parse_tu_dataset(dir.path(), "T").unwrap();
        assert_eq!(ds.labels, vec![1, 0]);
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.graphs[1].edges(), &[(0, 1)]);
        assert_eq!(ds.graphs[0].node_labels().unwrap(), &[0, 1]);
        assert_eq!(ds.graphs[1].node_labels().unwrap(), &[1, 2]);
    }

    #[test]
    fn missing_file_is_named() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T_A.txt", "1, 2\n");
        write(dir.path(), "T_graph_labels.txt", "1\n");
        let err = parse_tu_dataset(dir.path(), "T").unwrap_err();
        assert!(matches!(&err, GraphError::MissingFile(f) if f.ends_with("T_graph_indicator.txt")), "{err}");
    }

    #[test]
    fn dangling_index_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T_A.txt", "1, 2\n2, 1\n2, 7\n");
        write(dir.path(), "T_graph_indicator.txt", "1\n1\n");
        write(dir.path(), "T_graph_labels.txt", "1\n");
        match parse_tu_dataset(dir.path(), "T").unwrap_err() {
            GraphError::Format { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("dangling"));
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "T_A.txt", "1, 2\n2, 1\n2, 3\n3, 2\n4, 5\n5, 4\n");
        write(dir.path(), "T_graph_indicator.txt", "1\n1\n1\n2\n2\n2\n");
        write(dir.path(), "T_graph_labels.txt", "2\n3\n");
        write(dir.path(), "T_node_labels.txt", "0\n1\n0\n2\n2\n1\n");
        let ds = parse_tu_dataset(dir.path(), "T").unwrap();
        let out = tempfile::tempdir().unwrap();
        write_tu_dataset(&ds, out.path()).unwrap();
        let again = parse_tu_dataset(out.path(), "T").unwrap();
        assert_eq!(again.graphs, ds.graphs);
        assert_eq!(again.labels, ds.labels);
    }
}
