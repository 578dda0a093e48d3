macro_rules! example {
    ($module:ident, $file:literal, $test:ident) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }

        #[test]
        fn $test() {
            $module::run_example().expect(concat!($file, " should run"));
        }
    };
}

example!(delay_budget, "delay_budget.rs", delay_budget_runs);
example!(closed_form_plan, "closed_form_plan.rs", closed_form_plan_runs);
example!(oracle_search, "oracle_search.rs", oracle_search_runs);
example!(convergence_bound, "convergence_bound.rs", convergence_bound_runs);
example!(simulate_trace, "simulate_trace.rs", simulate_trace_runs);
example!(parameter_sweep, "parameter_sweep.rs", parameter_sweep_runs);
example!(baseline_comparison, "baseline_comparison.rs", baseline_comparison_runs);
