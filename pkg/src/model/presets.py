"""
Predefined model and training configurations
"""


class ModelPreset:
    """
    Named configurations for the supported scene families

    Dimensions follow the tuned setting (d_n=d_e=64, d_h=128, d_D=128,
    8 heads, 4 layers, 20 heads in the decoder); learning rate, batch size
    and epoch count follow the per-dataset training schedule. All
    schedules halve the learning rate every 100 epochs.
    """

    ETH_UCY = {
        'name': 'ETH-UCY',
        'description': 'Pedestrian scenes, 3.2 s observed / 4.8 s predicted at 2.5 Hz',
        'd_in': 2,
        't_p': 8,
        't_f': 12,
        'd_n': 64,
        'd_e': 64,
        'd_h': 128,
        'd_d': 128,
        'layers': 4,
        'heads': 8,
        'k': 20,
        'lr': 1.0e-3,
        'batch_size': 64,
        'epochs': 300,
        'metric_mode': 'marginal',
    }

    SDD = {
        'name': 'SDD',
        'description': 'Stanford drone scenes, same horizon as ETH-UCY',
        'd_in': 2,
        't_p': 8,
        't_f': 12,
        'd_n': 64,
        'd_e': 64,
        'd_h': 128,
        'd_d': 128,
        'layers': 4,
        'heads': 8,
        'k': 20,
        'lr': 1.0e-3,
        'batch_size': 256,
        'epochs': 300,
        'metric_mode': 'marginal',
    }

    NBA = {
        'name': 'NBA',
        'description': 'Basketball scenes, 2.0 s observed / 4.0 s predicted, absolute + relative inputs',
        'd_in': 4,
        't_p': 10,
        't_f': 20,
        'd_n': 64,
        'd_e': 64,
        'd_h': 128,
        'd_d': 128,
        'layers': 4,
        'heads': 8,
        'k': 20,
        'lr': 5.0e-4,
        'batch_size': 64,
        'epochs': 100,
        'metric_mode': 'joint',
    }

    TINY = {
        'name': 'Tiny',
        'description': 'Gradient-check configuration',
        'd_in': 2,
        't_p': 4,
        't_f': 3,
        'd_n': 8,
        'd_e': 8,
        'd_h': 16,
        'd_d': 16,
        'layers': 1,
        'heads': 2,
        'k': 2,
        'precision': 'double',
    }

    MID = {
        'name': 'Mid',
        'description': 'Desk-scale configuration for synthetic group scenes',
        'd_in': 2,
        't_p': 10,
        't_f': 20,
        'd_n': 32,
        'd_e': 32,
        'd_h': 64,
        'd_d': 64,
        'layers': 1,
        'heads': 4,
        'k': 20,
        'lr': 1.0e-3,
        'batch_size': 8,
        'epochs': 40,
        'max_steps': 2000,
        'metric_mode': 'joint',
    }

    _META_KEYS = ('name', 'description')

    @staticmethod
    def get_preset(name):
        """
        Get a preset by name

        Args:
            name: Name of the preset (case-insensitive, '-' and ' ' map to '_')

        Returns:
            Dictionary with configuration values
        """
        name_upper = name.upper().replace(' ', '_').replace('-', '_')

        if name_upper in ModelPreset.list_presets():
            return dict(getattr(ModelPreset, name_upper))
        else:
            raise ValueError(f"Unknown model preset: {name}. Available: {ModelPreset.list_presets()}")

    @staticmethod
    def config_values(name):
        """Preset values usable as TrainConfig overrides (metadata stripped)"""
        preset = ModelPreset.get_preset(name)
        return {key: value for key, value in preset.items() if key not in ModelPreset._META_KEYS}

    @staticmethod
    def list_presets():
        """
        List all available presets

        Returns:
            List of preset names
        """
        return [attr for attr in dir(ModelPreset)
                if not attr.startswith('_') and attr.isupper()]

    @staticmethod
    def create_custom(name, base='ETH_UCY', **values):
        """
        Create a custom preset derived from an existing one

        Args:
            name: Preset name
            base: Name of the preset to start from
            **values: Overridden configuration values

        Returns:
            Dictionary with configuration values
        """
        preset = ModelPreset.get_preset(base)
        preset.update(values)
        preset['name'] = name
        preset['description'] = f"Custom preset derived from {base}"
        return preset
