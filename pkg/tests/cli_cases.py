"""One representative invocation per subcommand, shared by the CLI and acceptance tests."""

EDC_DESC = '{"kind": "box", "rule": "omega", "box_on": "mult:3"}'

CASES = {
    "density": ["density", "--set", "R(evens)", "--n", "1024", "--depth", "1024", "--window", "512,1024"],
    "blocks": ["blocks", "--set", "squares", "--k", "8"],
    "transform": ["transform", "--desc", EDC_DESC, "--op", "edc_to_generic", "--depth", "12"],
    "code": ["code", "--map", "Rtilde", "--set", "odds", "--depth", "16"],
    "diagonal": ["diagonal", "--E", "3", "--M", "32", "--s", "500"],
    "realize": ["realize", "--p", "cc,alpha=1", "--q", "gc,edc", "--classify", "--depth", "1024"],
    "enumop": ["enumop", "--reduction", "pair_xor", "--max-n", "6"],
    "ubfb": ["ubfb", "--reduction", "lag2", "--k", "10"],
    "cone": ["cone", "--target", "evens", "--pool", "echo,constant0", "--depth", "6", "--trials", "50", "--seed", "3"],
    "fubini": ["fubini", "--family", "demo", "--q", "7/10"],
    "extract": ["extract", "--mode", "edc", "--n", "16", "--seed", "5"],
}
