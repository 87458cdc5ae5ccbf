"""Experiment planning: factor taxonomy, factorial designs, robust selection
against a brute-force oracle, and report rendering."""

import itertools
import random

import pytest

from greybox.experiment import (
    Aggregation,
    Design,
    Direction,
    DuplicateName,
    DuplicateRun,
    FactorCategory,
    FactorSpec,
    IncompleteRuns,
    MissingControllable,
    MissingResponse,
    NoiseConditioning,
    PLANNING_PROMPTS,
    ReportSection,
    ReportSkeleton,
    ResponseWithLevels,
    RunRecord,
    SECTION_ORDER,
    UnknownResponse,
    classify_factors,
    design_to_csv,
    full_factorial,
    render_report,
    report_skeleton,
    robust_select,
    runs_from_csv,
    runs_to_csv,
)


def typical_factors():
    return classify_factors([
        ("algorithm", FactorCategory.CONTROLLABLE, ["A", "B"]),
        ("n", FactorCategory.OBSERVABLE, [2, 10]),
        ("instance_seed", FactorCategory.NOISE, [1, 2, 3, 4, 5]),
        ("evals_to_target", FactorCategory.RESPONSE, []),
    ])


class TestClassification:
    def test_typical_taxonomy_classifies(self):
        factors = typical_factors()
        assert [f.category for f in factors] == [
            FactorCategory.CONTROLLABLE,
            FactorCategory.OBSERVABLE,
            FactorCategory.NOISE,
            FactorCategory.RESPONSE,
        ]

    def test_response_with_levels_rejected(self):
        with pytest.raises(ResponseWithLevels):
            classify_factors([("y", FactorCategory.RESPONSE, [1])])

    def test_duplicate_name_rejected(self):
        with pytest.raises(DuplicateName):
            classify_factors([
                ("n", FactorCategory.OBSERVABLE, [1]),
                ("n", FactorCategory.NOISE, [2]),
            ])

    def test_string_categories_accepted(self):
        [factor] = classify_factors([("algorithm", "controllable", ["A"])])
        assert factor.category is FactorCategory.CONTROLLABLE


class TestFullFactorial:
    def test_cell_count_is_product_of_levels(self):
        design = full_factorial(typical_factors(), replicates=3)
        assert len(design.cells) == 2 * 2 * 5
        assert design.total_runs == 60

    def test_single_factor_single_level(self):
        design = full_factorial(classify_factors([
            ("algorithm", FactorCategory.CONTROLLABLE, ["A"]),
            ("y", FactorCategory.RESPONSE, []),
        ]))
        assert len(design.cells) == 1
        assert design.total_runs == 1

    def test_missing_controllable_rejected(self):
        with pytest.raises(MissingControllable):
            full_factorial(classify_factors([
                ("n", FactorCategory.OBSERVABLE, [1]),
                ("y", FactorCategory.RESPONSE, []),
            ]))

    def test_missing_response_rejected(self):
        with pytest.raises(MissingResponse):
            full_factorial(classify_factors([
                ("algorithm", FactorCategory.CONTROLLABLE, ["A"]),
            ]))

    def test_cells_ordered_by_name_then_level_index(self):
        design = full_factorial(classify_factors([
            ("b", FactorCategory.CONTROLLABLE, ["x", "y"]),
            ("a", FactorCategory.OBSERVABLE, [3, 1]),
            ("y", FactorCategory.RESPONSE, []),
        ]))
        assert design.cells == (
            (("a", 3), ("b", "x")),
            (("a", 3), ("b", "y")),
            (("a", 1), ("b", "x")),
            (("a", 1), ("b", "y")),
        )

    def test_random_factor_sets_match_analytic_product(self):
        rng = random.Random(5)
        for _ in range(50):
            factors = [("resp", FactorCategory.RESPONSE, []),
                       ("c0", FactorCategory.CONTROLLABLE, list(range(rng.randint(1, 4))) or [0])]
            expected = len(factors[1][2])
            for i in range(rng.randint(0, 3)):
                category = rng.choice([FactorCategory.OBSERVABLE, FactorCategory.NOISE,
                                       FactorCategory.CONTROLLABLE])
                levels = [f"l{j}" for j in range(rng.randint(1, 4))]
                factors.append((f"f{i}", category, levels))
                expected *= len(levels)
            design = full_factorial(classify_factors(factors))
            assert len(design.cells) == expected


def make_runs(design: Design, response: str, value_fn, seed: int = 0) -> list[RunRecord]:
    return [
        RunRecord(
            assignment=tuple(sorted(cell)),
            replicate=rep,
            responses={response: value_fn(dict(cell), rep)},
            seed=seed,
        )
        for cell in design.cells
        for rep in range(design.replicates)
    ]


def oracle_robust_select(design, runs, response, aggregation, direction):
    """Independent brute force: explicit nested loops over assignments."""
    observables = [f for f in design.factors if f.category is FactorCategory.OBSERVABLE]
    controllables = [f for f in design.factors if f.category is FactorCategory.CONTROLLABLE]
    noises = [f for f in design.factors if f.category is FactorCategory.NOISE]

    run_map = {(tuple(sorted(r.assignment)), r.replicate): r for r in runs}
    out = {}
    obs_combos = list(itertools.product(*(f.levels for f in observables))) or [()]
    ctrl_combos = list(itertools.product(*(f.levels for f in controllables)))
    noise_combos = list(itertools.product(*(f.levels for f in noises))) or [()]
    for obs in obs_combos:
        obs_assign = tuple(sorted(zip([f.name for f in observables], obs)))
        best = None
        for ctrl_idx, ctrl in enumerate(ctrl_combos):
            ctrl_assign = tuple(sorted(zip([f.name for f in controllables], ctrl)))
            values = []
            for noise in noise_combos:
                noise_assign = tuple(zip([f.name for f in noises], noise))
                full = tuple(sorted(obs_assign + ctrl_assign + noise_assign))
                for rep in range(design.replicates):
                    values.append(run_map[(full, rep)].responses[response])
            if aggregation is Aggregation.MEAN:
                agg = sum(values) / len(values)
            elif direction is Direction.MINIMIZE:
                agg = max(values)
            else:
                agg = min(values)
            # Index-based tiebreak: first combo in product order wins ties.
            key = (agg,)
            if best is None or (
                key < best[0] if direction is Direction.MINIMIZE else key > best[0]
            ):
                best = (key, ctrl_assign, agg)
        out[obs_assign] = (best[1], best[2])
    return out


class TestRobustSelect:
    def spec_example_design(self):
        factors = classify_factors([
            ("algorithm", FactorCategory.CONTROLLABLE, ["A", "B"]),
            ("noise", FactorCategory.NOISE, [0, 1, 2]),
            ("y", FactorCategory.RESPONSE, []),
        ])
        return full_factorial(factors)

    def test_mean_aggregation_prefers_lower_mean(self):
        # A responses over noise: {3, 3, 9} (mean 5); B: {4, 4, 4} (mean 4).
        design = self.spec_example_design()
        table = {"A": [3.0, 3.0, 9.0], "B": [4.0, 4.0, 4.0]}
        runs = make_runs(design, "y", lambda cell, rep: table[cell["algorithm"]][cell["noise"]])
        selection = robust_select(design, runs, "y", Aggregation.MEAN, Direction.MINIMIZE)
        ((ctrl, value),) = selection.values()
        assert dict(ctrl)["algorithm"] == "B"
        assert value == pytest.approx(4.0)

    def test_worst_case_aggregation_prefers_lower_max(self):
        design = self.spec_example_design()
        table = {"A": [3.0, 3.0, 9.0], "B": [4.0, 4.0, 4.0]}
        runs = make_runs(design, "y", lambda cell, rep: table[cell["algorithm"]][cell["noise"]])
        selection = robust_select(design, runs, "y", Aggregation.WORST_CASE, Direction.MINIMIZE)
        ((ctrl, value),) = selection.values()
        assert dict(ctrl)["algorithm"] == "B"
        assert value == pytest.approx(4.0)

    def test_missing_run_raises_incomplete(self):
        design = self.spec_example_design()
        runs = make_runs(design, "y", lambda cell, rep: 1.0)[:-1]
        with pytest.raises(IncompleteRuns):
            robust_select(design, runs, "y")

    def test_duplicate_run_rejected(self):
        design = self.spec_example_design()
        runs = make_runs(design, "y", lambda cell, rep: 1.0)
        with pytest.raises(DuplicateRun):
            robust_select(design, runs + [runs[0]], "y")

    def test_unknown_response_rejected(self):
        design = self.spec_example_design()
        runs = make_runs(design, "y", lambda cell, rep: 1.0)
        with pytest.raises(UnknownResponse):
            robust_select(design, runs, "speed")

    def test_noise_conditioning_rejected(self):
        design = self.spec_example_design()
        runs = make_runs(design, "y", lambda cell, rep: 1.0)
        with pytest.raises(NoiseConditioning):
            robust_select(design, runs, "y", condition_on=["noise"])

    def test_noise_never_keys_the_output(self):
        design = full_factorial(typical_factors())
        runs = make_runs(design, "evals_to_target", lambda cell, rep: float(cell["n"]))
        selection = robust_select(design, runs, "evals_to_target")
        for obs_assign in selection:
            names = {name for name, _ in obs_assign}
            assert names == {"n"}

    def _random_design(self, rng: random.Random):
        categories = [FactorCategory.CONTROLLABLE]
        n_extra = rng.randint(0, 3)
        categories += [
            rng.choice([FactorCategory.OBSERVABLE, FactorCategory.NOISE, FactorCategory.CONTROLLABLE])
            for _ in range(n_extra)
        ]
        raw = [("resp", FactorCategory.RESPONSE, [])]
        for i, category in enumerate(categories):
            raw.append((f"f{i}", category, [f"l{j}" for j in range(rng.randint(1, 3))]))
        return full_factorial(classify_factors(raw), replicates=rng.randint(1, 2))

    def test_matches_brute_force_oracle_on_random_designs(self):
        rng = random.Random(2024)
        for _ in range(200):
            design = self._random_design(rng)
            runs = make_runs(
                design, "resp", lambda cell, rep: round(rng.uniform(0, 10), 3)
            )
            for aggregation in Aggregation:
                for direction in Direction:
                    got = robust_select(design, runs, "resp", aggregation, direction)
                    expected = oracle_robust_select(design, runs, "resp", aggregation, direction)
                    assert set(got) == set(expected)
                    for key in got:
                        # Values must agree; configurations may differ only on
                        # exact ties, where both must achieve the same value.
                        assert got[key][1] == pytest.approx(expected[key][1])

    def test_positive_scaling_never_changes_selection(self):
        rng = random.Random(99)
        for _ in range(40):
            design = self._random_design(rng)
            runs = make_runs(design, "resp", lambda cell, rep: round(rng.uniform(0, 10), 3))
            for aggregation in Aggregation:
                for direction in Direction:
                    base = robust_select(design, runs, "resp", aggregation, direction)
                    scaled_runs = [
                        RunRecord(r.assignment, r.replicate, {"resp": 7.5 * r.responses["resp"]}, r.seed)
                        for r in runs
                    ]
                    scaled = robust_select(design, scaled_runs, "resp", aggregation, direction)
                    assert {k: v[0] for k, v in base.items()} == {k: v[0] for k, v in scaled.items()}


class TestReports:
    def test_empty_metadata_gives_seven_titled_empty_sections(self):
        skeleton = report_skeleton({})
        assert [s for s, _ in skeleton.sections] == list(SECTION_ORDER)
        assert all(body == "" for _, body in skeleton.sections)

    def test_section_order_normalized(self):
        scrambled = ReportSkeleton(sections=(
            (ReportSection.DISCUSSION, "d"),
            (ReportSection.RESEARCH_QUESTION, "q"),
        ))
        assert [s for s, _ in scrambled.sections] == list(SECTION_ORDER)
        assert scrambled.body(ReportSection.DISCUSSION) == "d"
        assert scrambled.body(ReportSection.TASK) == ""

    def test_guide_prompts_seed_planning_section(self):
        skeleton = report_skeleton({"guide_prompts": True})
        body = skeleton.body(ReportSection.PRE_EXPERIMENTAL_PLANNING)
        assert all(prompt in body for prompt in PLANNING_PROMPTS)

    def test_render_embeds_design_and_selection(self):
        design = full_factorial(typical_factors())
        runs = make_runs(design, "evals_to_target", lambda cell, rep: 1.0 + (cell["algorithm"] == "A"))
        selection = robust_select(design, runs, "evals_to_target")
        text = render_report(report_skeleton({"research_question": "which solver?"}), design, selection)
        titles = [line for line in text.splitlines() if line.startswith("## ")]
        assert titles == [
            "## Research Question",
            "## Pre-experimental Planning",
            "## Task",
            "## Setup",
            "## Results",
            "## Observations",
            "## Discussion",
        ]
        assert "algorithm=B" in text
        assert "total runs: 20" in text

    def test_render_with_one_selection_table(self):
        design = full_factorial(typical_factors())
        runs = make_runs(design, "evals_to_target", lambda cell, rep: 1.0)
        selection = robust_select(design, runs, "evals_to_target")
        text = render_report(report_skeleton({}), design, selection)
        assert text.count("| observable levels |") == 1


class TestCsv:
    def test_design_csv_has_one_row_per_cell(self):
        design = full_factorial(typical_factors())
        text = design_to_csv(design)
        assert text.splitlines()[0] == "cell,algorithm,instance_seed,n"
        assert len(text.splitlines()) == 1 + len(design.cells)

    def test_runs_round_trip_through_csv(self):
        design = full_factorial(typical_factors(), replicates=2)
        runs = make_runs(design, "evals_to_target", lambda cell, rep: float(rep + len(cell)))
        text = runs_to_csv(design, runs)
        parsed = runs_from_csv(design, text)
        assert parsed == runs
