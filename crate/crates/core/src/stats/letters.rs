//! Compact letter display by insert-and-absorb over the non-significance
//! graph, plus the grouping-table renderer.

use std::collections::BTreeSet;

use super::TukeyResult;

/// Assign letters to groups (given in display order, best mean first)
/// from the pairwise significance matrix.
///
/// Insert-and-absorb: start with one column holding every group; for each
/// significant pair split every column containing both members; absorb
/// columns that became subsets of another. Each surviving column is one
/// letter, ordered so the top-mean groups take the earliest letters.
pub(super) fn assign_letters(significant: &[Vec<bool>]) -> Vec<BTreeSet<usize>> {
    let n = significant.len();
    let mut columns: Vec<BTreeSet<usize>> = vec![(0..n).collect()];
    for i in 0..n {
        for j in (i + 1)..n {
            if !significant[i][j] {
                continue;
            }
            let mut next = Vec::with_capacity(columns.len() + 1);
            for col in columns.drain(..) {
                if col.contains(&i) && col.contains(&j) {
                    let mut without_i = col.clone();
                    without_i.remove(&i);
                    let mut without_j = col;
                    without_j.remove(&j);
                    next.push(without_i);
                    next.push(without_j);
                } else {
                    next.push(col);
                }
            }
            absorb(&mut next);
            columns = next;
        }
    }
    // Earliest letter goes to the column whose best-ranked member (and
    // then full membership) sorts first.
    columns.sort_by(|a, b| {
        let ka: Vec<usize> = a.iter().copied().collect();
        let kb: Vec<usize> = b.iter().copied().collect();
        ka.cmp(&kb)
    });

    let mut letters: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (letter, col) in columns.iter().enumerate() {
        for &group in col {
            letters[group].insert(letter);
        }
    }
    letters
}

fn absorb(columns: &mut Vec<BTreeSet<usize>>) {
    let mut keep = vec![true; columns.len()];
    for a in 0..columns.len() {
        for b in 0..columns.len() {
            if a != b
                && keep[a]
                && keep[b]
                && columns[a].is_subset(&columns[b])
                && (columns[a].len() < columns[b].len() || a > b)
            {
                keep[a] = false;
            }
        }
    }
    let mut idx = 0;
    columns.retain(|_| {
        let k = keep[idx];
        idx += 1;
        k
    });
}

/// "A", "B", ... "Z", "AA", "AB", ...
pub fn letter_name(index: usize) -> String {
    let mut name = String::new();
    let mut i = index;
    loop {
        name.insert(0, char::from(b'A' + (i % 26) as u8));
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    name
}

/// Aligned text table mirroring the published grouping layout:
/// architecture, method, mean recall, comma-joined letters, rows sorted
/// by descending mean.
pub fn render_grouping_table(result: &TukeyResult) -> String {
    let mut rows: Vec<[String; 4]> = vec![[
        "Architecture".into(),
        "Method".into(),
        "Mean R@1".into(),
        "Group".into(),
    ]];
    for (summary, letters) in result.groups.iter().zip(&result.letters) {
        rows.push([
            summary.label.architecture.clone(),
            summary.label.method.clone(),
            format!("{:.2}", summary.mean),
            letters
                .iter()
                .map(|&l| letter_name(l))
                .collect::<Vec<_>>()
                .join(","),
        ]);
    }
    let widths: Vec<usize> = (0..4)
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (idx, row) in rows.iter().enumerate() {
        let line = format!(
            "{:<w0$}  {:<w1$}  {:>w2$}  {:<w3$}",
            row[0],
            row[1],
            row[2],
            row[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
        );
        out.push_str(line.trim_end());
        out.push('\n');
        if idx == 0 {
            for (c, w) in widths.iter().enumerate() {
                if c > 0 {
                    out.push_str("  ");
                }
                out.push_str(&"-".repeat(*w));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; n]; n];
        for &(i, j) in pairs {
            m[i][j] = true;
            m[j][i] = true;
        }
        m
    }

    #[test]
    fn no_significant_pairs_share_one_letter() {
        let letters = assign_letters(&from_pairs(4, &[]));
        for set in &letters {
            assert_eq!(set.iter().copied().collect::<Vec<_>>(), vec![0]);
        }
    }

    #[test]
    fn fully_significant_pairs_get_distinct_letters() {
        let letters = assign_letters(&from_pairs(3, &[(0, 1), (0, 2), (1, 2)]));
        assert_eq!(letters[0].len(), 1);
        assert_eq!(letters[1].len(), 1);
        assert_eq!(letters[2].len(), 1);
        assert_ne!(letters[0], letters[1]);
        assert_ne!(letters[1], letters[2]);
        assert_ne!(letters[0], letters[2]);
        // Best group takes letter A.
        assert!(letters[0].contains(&0));
    }

    #[test]
    fn chain_structure_yields_overlapping_letters() {
        // 0 vs 2 significant; 0-1 and 1-2 not: the middle group shares a
        // letter with both ends.
        let letters = assign_letters(&from_pairs(3, &[(0, 2)]));
        assert!(!letters[0].is_disjoint(&letters[1]));
        assert!(!letters[1].is_disjoint(&letters[2]));
        assert!(letters[0].is_disjoint(&letters[2]));
    }

    #[test]
    fn letter_names_extend_past_z() {
        assert_eq!(letter_name(0), "A");
        assert_eq!(letter_name(25), "Z");
        assert_eq!(letter_name(26), "AA");
        assert_eq!(letter_name(27), "AB");
    }
}
