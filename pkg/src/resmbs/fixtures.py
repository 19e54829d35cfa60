"""Bundled deterministic fixtures: the default root/suffix dictionary, a
synthetic prospectus-text suite with exact truth pairs, and the curated
institution-evidence file used by the toxicity protocol.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .corpus import FinancialInstitution
from .extraction import DEFAULT_ROLE_KEYWORDS, RootSuffixDictionary, normalize_name

#: root term -> standardized institution id
DEFAULT_ROOTS: dict[str, str] = {
    "Wachovia": "wachovia",
    "National City": "national_city",
    "HSBC": "hsbc",
    "U.S. Bank": "us_bank",
    "Wells Fargo": "wells_fargo",
    "Countrywide": "countrywide",
    "IndyMac": "indymac",
    "Lehman Brothers": "lehman",
    "Lehman": "lehman",
    "Deutsche Bank": "deutsche_bank",
    "Fremont": "fremont",
    "Ameriquest": "ameriquest",
    "Weyerhauser": "weyerhauser",
    "PHH": "phh",
    "Morgan Stanley": "morgan_stanley",
    "Banc of America": "banc_of_america",
    "Bank of America": "banc_of_america",
    "Bear Stearns": "bear_stearns",
    "EMC Mortgage": "emc_mortgage",
    "EMC": "emc_mortgage",
    "GMAC": "gmac",
    "Washington Mutual": "washington_mutual",
    "Long Beach": "long_beach",
    "Flagstar": "flagstar",
    "American Home": "american_home",
    "Fieldstone": "fieldstone",
    "Ace Securities": "ace_securities",
    "Aurora": "aurora",
    "Structured Asset": "structured_asset",
    "Wilmington Trust": "wilmington_trust",
    "Argent": "argent",
    "Olympus": "olympus",
    "Encore Credit": "encore_credit",
    "Merrill Lynch": "merrill_lynch",
    "First Horizon": "first_horizon",
    "Maia Mortgage Finance": "maia",
    "Maia": "maia",
    "Homecomings Financial": "homecomings",
    "Renaissance": "renaissance",
    "Principal Residential": "principal_residential",
    "Equity One": "equity_one",
    "Greenpoint": "greenpoint",
    "Option One": "option_one",
    "Delta Funding": "delta_funding",
    "J.P. Morgan Chase": "jpmorgan_chase",
    "JPMorgan Chase": "jpmorgan_chase",
    "Chase Manhattan Bank": "chase_manhattan",
    "UBS": "ubs",
}

DEFAULT_SUFFIXES: list[str] = [
    "National Association",
    "N.A.",
    "Inc.",
    "Inc",
    "Corp.",
    "Corp",
    "Corporation",
    "Company",
    "LLC",
    "L.L.C.",
    "Bank",
    "Trust",
    "Trust Company",
    "Home Loans",
    "Home Loan Services",
    "Mortgage",
    "Mortgage Finance",
    "Loan",
    "Loans",
    "Securities Corporation",
    "Securities",
    "Financial",
    "Funding",
    "Investment & Loan",
    "Investment",
    "Savings Bank",
    "FSB",
]


def default_dictionary() -> RootSuffixDictionary:
    standard = {
        normalize_name(root): FinancialInstitution(id=std_id, display_name=root)
        for root, std_id in DEFAULT_ROOTS.items()
    }
    return RootSuffixDictionary(
        roots=set(DEFAULT_ROOTS),
        suffixes=set(DEFAULT_SUFFIXES),
        standard_names=standard,
    )


def write_dictionary_files(out_dir) -> tuple[Path, Path]:
    """Write the bundled dictionary in the CLI's file formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    roots_csv = out / "roots.csv"
    suffix_txt = out / "suffixes.txt"
    with open(roots_csv, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for root in sorted(DEFAULT_ROOTS):
            writer.writerow([root, DEFAULT_ROOTS[root]])
    suffix_txt.write_text("\n".join(DEFAULT_SUFFIXES) + "\n", encoding="utf-8")
    return roots_csv, suffix_txt


# -- synthetic prospectus-text suite -----------------------------------------

@dataclass
class FixtureDoc:
    doc_id: str
    text: str
    truth: set[tuple[str, str]]  # (canonical role, standardized id)
    orphan_mentions: int = 0


_KEYWORD_NORMS = {normalize_name(k): v for k, v in DEFAULT_ROLE_KEYWORDS.items()}


def _canonical_role(surface_label: str) -> str:
    return _KEYWORD_NORMS[normalize_name(surface_label)]


def _build_doc(doc_id: str, plan) -> FixtureDoc:
    """plan: list of ("role", label, [(name_text, std_id), ...])
                  | ("orphan", [(name_text, std_id), ...])
                  | ("plain", text)
                  | ("inline", [(label, name_text, std_id), ...])  # one line
    """
    lines: list[str] = []
    truth: set[tuple[str, str]] = set()
    orphans = 0
    for entry in plan:
        kind = entry[0]
        if kind == "plain":
            lines.append(entry[1])
        elif kind == "role":
            _, label, names = entry
            role = _canonical_role(label)
            lines.append(f"{label}: " + ", ".join(text for text, _ in names))
            truth.update((role, std_id) for _, std_id in names)
        elif kind == "orphan":
            _, names = entry
            lines.append("See also " + " and ".join(text for text, _ in names) + ".")
            orphans += len(names)
        elif kind == "inline":
            _, cells = entry
            lines.append("; ".join(f"{label}: {text}" for label, text, _ in cells))
            truth.update((_canonical_role(label), std_id) for label, text, std_id in cells)
        else:
            raise ValueError(kind)
    return FixtureDoc(doc_id=doc_id, text="\n".join(lines) + "\n", truth=truth, orphan_mentions=orphans)


def fixture_documents() -> list[FixtureDoc]:
    """A 36-document suite with exact extraction truth.

    Covers summary-table layouts, suffix and case variants, shared-anchor
    multi-name rows, several anchors on one row, and anchorless (orphan)
    mentions that must be dropped and tallied.
    """
    w = ("Wachovia Bank, National Association", "wachovia")
    docs: list[FixtureDoc] = []

    # 1-12: summary-table style documents rotating through institutions.
    tables = [
        [
            ("plain", "Prospectus Supplement dated March 12, 2006"),
            ("role", "Issuing Entity", [("Wachovia Mortgage Loan Trust", "wachovia")]),
            ("role", "Depositor", [w]),
            ("role", "Originator", [("National City Corp.", "national_city")]),
            ("role", "Servicer", [("National City Home Loan Services, Inc.", "national_city")]),
            ("role", "Trustee", [("U.S. Bank National Association", "us_bank")]),
        ],
        [
            ("plain", "Summary of Parties"),
            ("role", "Issuer", [("IndyMac INDX Mortgage Loan Trust", "indymac")]),
            ("role", "Sponsor", [("IndyMac Bank, FSB", "indymac")]),
            ("role", "Originator", [("IndyMac Bank", "indymac")]),
            ("role", "Master Servicer", [("Wells Fargo Bank, National Association", "wells_fargo")]),
        ],
        [
            ("role", "Issuing Entity", [("Lehman Brothers", "lehman")]),
            ("role", "Originator", [("Aurora Loan Services", "aurora")]),
            ("role", "Seller", [("Structured Asset Securities Corporation", "structured_asset")]),
            ("role", "Trustee", [("Deutsche Bank Trust Company", "deutsche_bank")]),
        ],
        [
            ("role", "Issuer", [("Fremont Home Loan Trust", "fremont")]),
            ("role", "Originator", [("Fremont Investment & Loan", "fremont")]),
            ("role", "Depositor", [("Fremont Mortgage Securities Corporation", "fremont")]),
            ("role", "Servicer", [("Wells Fargo Bank", "wells_fargo")]),
        ],
        [
            ("role", "Issuing Entity", [("Ace Securities Corp.", "ace_securities")]),
            ("role", "Originator", [("American Home Mortgage Corp.", "american_home"), ("Fieldstone Mortgage Company", "fieldstone")]),
            ("role", "Trustee", [("HSBC Bank", "hsbc")]),
        ],
        [
            ("role", "Issuer", [("Bear Stearns Mortgage Funding Trust", "bear_stearns")]),
            ("role", "Originator", [("EMC Mortgage Corporation", "emc_mortgage")]),
            ("role", "Seller", [("EMC Mortgage", "emc_mortgage")]),
            ("role", "Custodian", [("JPMorgan Chase Bank", "jpmorgan_chase")]),
        ],
        [
            ("role", "Issuing Entity", [("Morgan Stanley Mortgage Loan Trust", "morgan_stanley")]),
            ("role", "Originator", [("Long Beach Mortgage Company", "long_beach"), ("Flagstar Bank, FSB", "flagstar")]),
            ("role", "Sponsor", [("Morgan Stanley", "morgan_stanley")]),
        ],
        [
            ("role", "Issuer", [("GMAC Mortgage Corporation", "gmac")]),
            ("role", "Originator", [("Encore Credit Corp.", "encore_credit")]),
            ("role", "Servicer", [("Homecomings Financial, LLC", "homecomings")]),
        ],
        [
            ("role", "Issuing Entity", [("Ameriquest Mortgage Securities Inc.", "ameriquest")]),
            ("role", "Originator", [("Ameriquest Mortgage Company", "ameriquest")]),
            ("role", "Trustee", [("Deutsche Bank National Association", "deutsche_bank")]),
            ("role", "Underwriter", [("UBS Securities", "ubs")]),
        ],
        [
            ("role", "Issuer", [("Wilmington Trust Company", "wilmington_trust")]),
            ("role", "Seller", [("Countrywide Home Loans, Inc.", "countrywide")]),
            ("role", "Servicer", [("Countrywide Home Loans", "countrywide")]),
            ("role", "Depositor", [("Countrywide Securities Corporation", "countrywide")]),
        ],
        [
            ("role", "Issuing Entity", [("Renaissance Home Equity Loan Trust", "renaissance")]),
            ("role", "Originator", [("Delta Funding Corporation", "delta_funding")]),
            ("role", "Servicer", [("Option One Mortgage Corp.", "option_one")]),
        ],
        [
            ("role", "Issuer", [("First Horizon Home Loans", "first_horizon")]),
            ("role", "Originator", [("First Horizon Home Loan Corporation", "first_horizon")]),
            ("role", "Securities Administrator", [("Wells Fargo Bank, N.A.", "wells_fargo")]),
            ("role", "Swap Counterparty", [("Bank of America, National Association", "banc_of_america")]),
        ],
    ]
    for i, plan in enumerate(tables, start=1):
        docs.append(_build_doc(f"table{i:02d}", plan))

    # 13-20: suffix variants of one institution per document.
    suffix_variants = [
        ("U.S. Bank National Association", "us_bank"),
        ("U.S. Bank, N.A.", "us_bank"),
        ("Wachovia Bank, National Association", "wachovia"),
        ("Wachovia", "wachovia"),
        ("Countrywide Home Loans, Inc.", "countrywide"),
        ("Washington Mutual Savings Bank", "washington_mutual"),
        ("Maia Mortgage Finance", "maia"),
        ("Greenpoint Mortgage Funding", "greenpoint"),
    ]
    for i, name in enumerate(suffix_variants, start=1):
        docs.append(
            _build_doc(
                f"suffix{i:02d}",
                [("plain", "Parties to the agreement"), ("role", "Trustee", [name])],
            )
        )

    # 21-26: case and whitespace variants resolve to the same institution.
    case_variants = [
        ("WACHOVIA  BANK", "wachovia"),
        ("wells   fargo bank", "wells_fargo"),
        ("INDYMAC BANK", "indymac"),
        ("Hsbc Bank", "hsbc"),
        ("MERRILL LYNCH", "merrill_lynch"),
        ("EQUITY ONE, INC.", "equity_one"),
    ]
    for i, name in enumerate(case_variants, start=1):
        docs.append(_build_doc(f"case{i:02d}", [("role", "Sponsor", [name])]))

    # 27-31: orphan mentions (no role anchor on their line) must be dropped.
    orphan_plans = [
        [
            ("role", "Issuer", [("PHH Mortgage", "phh")]),
            ("orphan", [("Wells Fargo Bank", "wells_fargo")]),
        ],
        [
            ("orphan", [("Deutsche Bank", "deutsche_bank"), ("HSBC Bank", "hsbc")]),
            ("role", "Originator", [("Argent Mortgage Company", "argent")]),
        ],
        [
            ("role", "Seller", [("Olympus Mortgage Company", "olympus")]),
            ("orphan", [("Bear Stearns", "bear_stearns")]),
            ("orphan", [("Chase Manhattan Bank", "chase_manhattan")]),
        ],
        [
            ("plain", "Recitals"),
            ("orphan", [("Weyerhauser Mortgage", "weyerhauser")]),
            ("role", "Depositor", [("Principal Residential Mortgage", "principal_residential")]),
        ],
        [
            ("role", "Trustee", [("Wilmington Trust", "wilmington_trust")]),
            ("orphan", [("Fieldstone Investment", "fieldstone")]),
        ],
    ]
    for i, plan in enumerate(orphan_plans, start=1):
        docs.append(_build_doc(f"orphan{i:02d}", plan))

    # 32-36: several anchors on one row and plural labels.
    inline_plans = [
        [("inline", [("Issuer", "Fremont General", "fremont"), ("Servicer", "Wells Fargo Bank", "wells_fargo")])],
        [("inline", [("Sponsor", "Lehman Brothers", "lehman"), ("Trustee", "U.S. Bank", "us_bank")])],
        [
            ("role", "Originators", [("Fremont Investment & Loan", "fremont"), ("American Home Mortgage", "american_home")]),
            ("role", "Issuers", [("Ace Securities Corp.", "ace_securities"), ("Deutsche Bank Securities", "deutsche_bank")]),
        ],
        [
            ("inline", [("Depositor", "GMAC Mortgage", "gmac"), ("Seller", "Homecomings Financial", "homecomings")]),
            ("role", "Cap Counterparty", [("Bear Stearns Financial", "bear_stearns")]),
        ],
        [
            ("role", "Servicers", [("Aurora Loan Services", "aurora"), ("Long Beach Mortgage Company", "long_beach")]),
            ("role", "Insurer", [("Banc of America", "banc_of_america")]),
        ],
    ]
    for i, plan in enumerate(inline_plans, start=1):
        docs.append(_build_doc(f"inline{i:02d}", plan))

    return docs


def write_fixture_documents(out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for doc in fixture_documents():
        path = out / f"{doc.doc_id}.txt"
        path.write_text(doc.text, encoding="utf-8")
        paths.append(path)
    return paths


def toxicity_evidence_path() -> Path:
    """Path of the curated institution-evidence CSV bundled with the package."""
    return Path(resources.files("resmbs").joinpath("data/toxicity_evidence.csv"))
