from dataclasses import dataclass

from green_complexity.src.data.codes import CPC, HS, IPC, ActivityCode, GreenClassification, PREFIX
from green_complexity.src.errors import ConfigError


@dataclass(frozen=True)
class BuiltinList:
    """A shipped green list: the scheme its codes belong to and a code -> description map."""
    scheme: str
    codes: dict


def get_cpc_y02_y04s():
    """CPC subclasses of the Y02/Y04S climate change tagging scheme."""
    subclasses = {
        'Y02A': "Technologies for adaptation to climate change",
        'Y02B': "Climate change mitigation technologies related to buildings",
        'Y02C': "Capture, storage, sequestration or disposal of greenhouse gases",
        'Y02D': "Climate change mitigation technologies in ICT",
        'Y02E': "Reduction of greenhouse gas emissions related to energy generation, transmission or distribution",
        'Y02P': "Climate change mitigation technologies in the production or processing of goods",
        'Y02T': "Climate change mitigation technologies related to transportation",
        'Y02W': "Climate change mitigation technologies related to wastewater treatment or waste management",
        'Y04S': "Systems integrating technologies related to power network operation and ICT",
    }
    return subclasses


def get_ipc_env_tech():
    """IPC groups of the environment-related technologies selection.

    Main groups and subclasses of the air, water and waste management
    domains plus the renewable energy and combustion efficiency ones.
    """
    groups = {
        # air pollution abatement
        'B01D53': "Separation of gases or vapours; recovering vapours; exhaust gas purification",
        'B01D46': "Filters or filtering processes for separating dispersed particles from gases",
        'B03C3': "Electrostatic separation of particles from gases",
        'F01N3': "Exhaust or silencing apparatus with means for purifying exhaust",
        'F01N9': "Electrical control of exhaust gas treating apparatus",
        'F23J15': "Arrangements of devices for treating smoke or fumes",
        'F23G7': "Incinerators for specific waste or low grade fuels",
        # water pollution abatement
        'C02F': "Treatment of water, waste water, sewage or sludge",
        'E03F': "Sewers; cesspools",
        'B63J4': "Arrangements of installations for treating ballast water or waste water",
        'E02B15': "Cleaning or keeping clear the surface of open water",
        # waste management
        'B09B': "Disposal of solid waste",
        'B09C': "Reclamation of contaminated soil",
        'B65F': "Gathering or removal of domestic or like refuse",
        'C05F': "Fertilisers from waste or refuse",
        'F23G5': "Incineration of waste",
        # renewable energy generation
        'F03D': "Wind motors",
        'H02S': "Generation of electric power by conversion of infrared radiation, visible light or ultraviolet light",
        'F24S': "Solar heat collectors; solar heat systems",
        'F03G6': "Devices for producing mechanical power from solar energy",
        'F24T': "Geothermal collectors; geothermal systems",
        'F03G4': "Devices for producing mechanical power from geothermal energy",
        'F03B13': "Adaptations of machines or engines for special use; ocean and tidal energy",
        'H01L31': "Semiconductor devices sensitive to radiation, including photovoltaic cells",
        'C10L5': "Solid fuels, including fuels from waste and biomass",
        'H01M8': "Fuel cells",
    }
    return groups


def get_hs_environmental_goods():
    """HS 6-digit subheadings of the APEC list of environmental goods."""
    subheadings = {
        '440290': "Wood charcoal, other than of bamboo",
        '701931': "Glass fibre mats",
        '730820': "Towers and lattice masts of iron or steel",
        '840410': "Auxiliary plant for boilers",
        '840420': "Condensers for steam or other vapour power units",
        '840510': "Producer gas or water gas generators",
        '841011': "Hydraulic turbines and water wheels, power <= 1,000 kW",
        '841012': "Hydraulic turbines and water wheels, power 1,000 to 10,000 kW",
        '841013': "Hydraulic turbines and water wheels, power > 10,000 kW",
        '841090': "Parts of hydraulic turbines and water wheels",
        '841181': "Gas turbines of a power <= 5,000 kW",
        '841182': "Gas turbines of a power > 5,000 kW",
        '841199': "Parts of gas turbines",
        '841780': "Industrial furnaces, including incinerators",
        '841919': "Instantaneous or storage water heaters, non-electric, including solar",
        '841939': "Dryers",
        '842121': "Machinery for filtering or purifying water",
        '842129': "Machinery for filtering or purifying liquids",
        '842139': "Machinery for filtering or purifying gases",
        '842199': "Parts of filtering or purifying machinery",
        '847989': "Machines and mechanical appliances having individual functions",
        '850164': "AC generators of an output > 750 kVA",
        '850231': "Wind-powered electric generating sets",
        '850239': "Other electric generating sets",
        '850490': "Parts of transformers and static converters",
        '854140': "Photosensitive semiconductor devices, including photovoltaic cells",
        '854390': "Parts of electrical machines with individual functions",
        '901380': "Other optical devices, appliances and instruments",
        '901390': "Parts of optical devices",
        '901580': "Other surveying, hydrographic and meteorological instruments",
        '902610': "Instruments for measuring the flow or level of liquids",
        '902620': "Instruments for measuring pressure",
        '902680': "Other instruments for measuring variables of liquids or gases",
        '902710': "Gas or smoke analysis apparatus",
        '902720': "Chromatographs and electrophoresis instruments",
        '902730': "Spectrometers and spectrophotometers",
        '902750': "Other instruments using optical radiations",
        '902780': "Other instruments for physical or chemical analysis",
        '903149': "Other optical measuring instruments",
        '903180': "Other measuring or checking instruments",
        '903289': "Other automatic regulating or controlling instruments",
    }
    return subheadings


BUILTIN = {
    "cpc-y02-y04s": BuiltinList(CPC, get_cpc_y02_y04s()),
    "ipc-env-tech": BuiltinList(IPC, get_ipc_env_tech()),
    "hs-environmental-goods": BuiltinList(HS, get_hs_environmental_goods()),
}

# list used when the configuration names none, by code scheme of the tagged layer
DEFAULT_FOR_SCHEME = {
    CPC: "cpc-y02-y04s",
    IPC: "ipc-env-tech",
    HS: "hs-environmental-goods",
}


def builtin_scheme(name):
    if name not in BUILTIN:
        raise ConfigError(f"unknown built-in green list {name!r}; known: {sorted(BUILTIN)}")
    return BUILTIN[name].scheme


def default_list(scheme):
    """Name of the built-in list for activities of ``scheme``."""
    if scheme not in DEFAULT_FOR_SCHEME:
        raise ConfigError(f"no built-in green list for {scheme} codes; set green_list to a list file")
    return DEFAULT_FOR_SCHEME[scheme]


def builtin_classification(name):
    """Ship-in green list by name, as a prefix classification."""
    scheme = builtin_scheme(name)
    entries = tuple((ActivityCode(scheme, code), PREFIX) for code in sorted(BUILTIN[name].codes))
    return GreenClassification(name, entries)
