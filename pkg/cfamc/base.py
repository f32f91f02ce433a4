"""
Base Object Class

Most value types in cfamc inherit from this base class, which gives them
a consistent representation:

>>> plan = make_snr_plan(10, 3, 'equal', seed=1)
>>> plan
<cfamc:SNRPlan | target_egc_snr_db:10.0 n_ru:3 mode:equal>

Subclasses pass the data they want shown to ``super().__repr__(data=...)``.

"""


class BaseObject(object):

    def __init__(self, *args, **kwargs):
        pass

    def __repr__(self, data=None):
        if data:
            data = ' '.join(['{0}:{1}'.format(k, v) for k, v in data.items()])
            return '<cfamc:{class_name} | {data}>'.format(
                                        class_name=self.__class__.__name__,
                                        data=data)
        return '<cfamc:{class_name}>'.format(class_name=self.__class__.__name__)
