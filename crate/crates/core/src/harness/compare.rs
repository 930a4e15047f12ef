//! Published Mackey-Glass (tau = 17, horizon 6) out-of-sample RMSE figures and
//! the ranked comparison table a run is placed into.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiteratureRow {
    pub model: &'static str,
    pub citation: &'static str,
    pub rmse: f64,
}

pub const LITERATURE: [LiteratureRow; 12] = [
    LiteratureRow {
        model: "Differential evolution - beta basis function neural networks (DE-BBFNN)",
        citation: "Dhahri & Alimi, NICSO 2007",
        rmse: 0.030,
    },
    LiteratureRow {
        model: "Dynamic evolving computation system (DECS)",
        citation: "Chen & Lin, Appl. Soft Comput. 2007",
        rmse: 0.0289,
    },
    LiteratureRow {
        model: "Orthogonal function neural network",
        citation: "Wang & Gu, ISNN 2009",
        rmse: 0.016,
    },
    LiteratureRow {
        model: "Multilayer feedforward neural network - backpropagation (MLFBP)",
        citation: "Aizenberg et al., Soft Comput. 2012",
        rmse: 0.0155,
    },
    LiteratureRow {
        model: "Backpropagation network optimized by hybrid K-means-greedy algorithm",
        citation: "Tan et al., Engineering Letters 2012",
        rmse: 0.015,
    },
    LiteratureRow {
        model: "Modified differential evolution and radial basis function (MDE-RBF)",
        citation: "Dhahri & Alimi, IJCNN 2006",
        rmse: 0.013,
    },
    LiteratureRow {
        model: "Functional-link-based neural fuzzy network, cooperative PSO + cultural algorithm (FLNFN-CCPSO)",
        citation: "Lin et al., IEEE TSMC-C 2009",
        rmse: 0.008274,
    },
    LiteratureRow {
        model: "Multilayer neural network with multi-valued neurons, QR decomposition (MLMVN-QR)",
        citation: "Aizenberg et al., Soft Comput. 2012",
        rmse: 0.0065,
    },
    LiteratureRow {
        model: "Wavelet neural network with hybrid learning approach (WNN-HLA)",
        citation: "Lin, J. Inf. Sci. Eng. 2006",
        rmse: 0.006,
    },
    LiteratureRow {
        model: "Multilayer neural network with multi-valued neurons (MLMVN)",
        citation: "Aizenberg et al., Soft Comput. 2012",
        rmse: 0.0056,
    },
    LiteratureRow {
        model: "Grid-based fuzzy system, 192 rules",
        citation: "Herrera et al., Neurocomputing 2007",
        rmse: 0.0041,
    },
    LiteratureRow {
        model: "Multigrid-based fuzzy system, 3 sub-grids, 120 rules",
        citation: "Herrera et al., Neurocomputing 2007",
        rmse: 0.0031,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub citation: String,
    pub rmse: f64,
    pub is_run: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Sorted by descending RMSE.
    pub rows: Vec<ComparisonRow>,
    /// Rank of the run by accuracy: 1 is the lowest RMSE.
    pub run_rank: usize,
}

impl ComparisonTable {
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>4}  {:<width$}  {:>10}  source",
            "rank", "model", "rmse"
        );
        let n = self.rows.len();
        for (i, row) in self.rows.iter().enumerate() {
            let marker = if row.is_run { "*" } else { " " };
            let _ = writeln!(
                out,
                "{:>3}{marker}  {:<width$}  {:>10.6}  {}",
                n - i,
                row.model,
                row.rmse,
                row.citation
            );
        }
        let _ = writeln!(
            out,
            "\n* this run: rank {} of {} (de-normalized out-of-sample RMSE)",
            self.run_rank,
            self.rows.len()
        );
        out
    }
}

/// Places a run's de-normalized RMSE among the published figures, listed from
/// the largest error down. On ties the run ranks behind the published row.
pub fn emit_comparison(run_label: &str, run_rmse: f64) -> ComparisonTable {
    let mut rows: Vec<ComparisonRow> = LITERATURE
        .iter()
        .map(|r| ComparisonRow {
            model: r.model.to_string(),
            citation: r.citation.to_string(),
            rmse: r.rmse,
            is_run: false,
        })
        .collect();
    rows.push(ComparisonRow {
        model: run_label.to_string(),
        citation: "this run".to_string(),
        rmse: run_rmse,
        is_run: true,
    });
    // on equal errors the run is listed above, i.e. ranked behind, the published row
    rows.sort_by(|a, b| b.rmse.total_cmp(&a.rmse).then(b.is_run.cmp(&a.is_run)));
    let position = rows.iter().position(|r| r.is_run).unwrap_or(0);
    let run_rank = rows.len() - position;
    ComparisonTable { rows, run_rank }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_has_twelve_published_rows_plus_run() {
        let t = emit_comparison("RPNN-EOF", 0.01);
        assert_eq!(t.rows.len(), 13);
        assert_eq!(t.rows.iter().filter(|r| r.is_run).count(), 1);
        assert!(t.rows.windows(2).all(|w| w[0].rmse >= w[1].rmse));
    }

    #[test]
    fn published_value_ranks_between_mlmvn_and_grid_fuzzy() {
        let t = emit_comparison("RPNN-EOF", 0.00416);
        let i = t.rows.iter().position(|r| r.is_run).unwrap();
        assert_eq!(t.rows[i - 1].rmse, 0.0056);
        assert_eq!(t.rows[i + 1].rmse, 0.0041);
        assert_eq!(t.run_rank, 3);
    }

    #[test]
    fn poor_run_ranks_last() {
        let t = emit_comparison("RPNN-EOF", 1.0);
        assert_eq!(t.run_rank, 13);
        assert!(t.rows[0].is_run);
        assert!(t.render().contains("rank 13 of 13"));
    }

    #[test]
    fn ties_rank_behind_published_rows() {
        let t = emit_comparison("RPNN-EOF", 0.0041);
        assert_eq!(t.run_rank, 3);
        let i = t.rows.iter().position(|r| r.is_run).unwrap();
        assert_eq!(t.rows[i + 1].rmse, 0.0041);
    }
}
